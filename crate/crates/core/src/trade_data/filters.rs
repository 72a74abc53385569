//! Sample-cleaning filters: the static country screen (population, export
//! size, explicit exclusions) and the four per-year filters.
//!
//! The yearly filters run in a fixed order: cell rounding, global product
//! minimum, product zero share, country zero share. All-zero rows and columns
//! left behind are removed last. Every removed unit of value is attributed to
//! exactly one drop or to the zeroed-cell tally, so the report balances
//! against the input total exactly.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::matrix::TradeMatrix;
use super::meta::CountryMeta;
use super::records::TradeRecord;
use crate::error::{Error, Result};

pub const FILTER_ORDER: [&str; 4] = ["cell_min", "global_min", "product_zero_share", "country_zero_share"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Apply the population/exports/exclusion screen before the yearly filters.
    pub static_filters: bool,
    /// Persons; countries must exceed it in the reference year.
    pub min_population: f64,
    pub population_reference_year: i32,
    /// USD; countries must exceed it in the reference year.
    pub min_total_exports: f64,
    pub exports_reference_year: i32,
    pub excluded_countries: BTreeSet<String>,
    /// Products are dropped when more than this share of countries has zero exports.
    pub product_zero_share_max: f64,
    /// Countries are dropped when at least this share of products is zero.
    pub country_zero_share_max: f64,
    pub min_product_global_exports: f64,
    /// Cells strictly below this value are rounded to zero.
    pub min_cell_value: f64,
    /// Repeat the yearly cascade until nothing changes.
    pub iterate_to_fixed_point: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            static_filters: true,
            min_population: 1_250_000.0,
            population_reference_year: 2008,
            min_total_exports: 1e9,
            exports_reference_year: 2008,
            excluded_countries: ["TCD", "IRQ", "AFG"].into_iter().map(String::from).collect(),
            product_zero_share_max: 0.80,
            country_zero_share_max: 0.95,
            min_product_global_exports: 1e7,
            min_cell_value: 5_000.0,
            iterate_to_fixed_point: false,
        }
    }
}

impl FilterConfig {
    /// Filters that never remove anything on positive data.
    pub fn permissive() -> Self {
        FilterConfig {
            static_filters: false,
            min_population: 0.0,
            min_total_exports: 0.0,
            excluded_countries: BTreeSet::new(),
            product_zero_share_max: 1.0,
            country_zero_share_max: 1.0,
            min_product_global_exports: 0.0,
            min_cell_value: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("min_population", self.min_population),
            ("min_total_exports", self.min_total_exports),
            ("min_product_global_exports", self.min_product_global_exports),
            ("min_cell_value", self.min_cell_value),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a finite value >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("product_zero_share_max", self.product_zero_share_max),
            ("country_zero_share_max", self.country_zero_share_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    fn decimal(v: f64) -> Decimal {
        Decimal::from_f64_retain(v).unwrap_or(Decimal::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    ExcludedList,
    NoMeta,
    Population,
    Exports,
    GlobalMin,
    ProductZeroShare,
    CountryZeroShare,
    AllZero,
}

/// A removed country or product with the export value removed with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedEntity {
    pub label: String,
    pub reason: DropReason,
    pub value: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Retained value over input value.
    pub retained_trade_share: f64,
    pub countries_before: usize,
    pub countries_after: usize,
    pub products_before: usize,
    pub products_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub year: i32,
    pub filter_order: Vec<String>,
    pub countries_dropped: Vec<DroppedEntity>,
    pub products_dropped: Vec<DroppedEntity>,
    pub cells_zeroed: usize,
    pub cells_zeroed_value: Decimal,
    pub input_total: Decimal,
    pub retained_total: Decimal,
    pub coverage: Coverage,
    /// Yearly passes executed.
    pub passes: usize,
    /// Whether one more yearly pass over the output would remove anything.
    pub second_pass_changes: bool,
}

impl FilterReport {
    fn empty(matrix: &TradeMatrix) -> Self {
        let total = matrix.total();
        FilterReport {
            year: matrix.year(),
            filter_order: Vec::new(),
            countries_dropped: Vec::new(),
            products_dropped: Vec::new(),
            cells_zeroed: 0,
            cells_zeroed_value: Decimal::ZERO,
            input_total: total,
            retained_total: total,
            coverage: Coverage {
                retained_trade_share: 1.0,
                countries_before: matrix.n_countries(),
                countries_after: matrix.n_countries(),
                products_before: matrix.n_products(),
                products_after: matrix.n_products(),
            },
            passes: 0,
            second_pass_changes: false,
        }
    }

    fn finish(&mut self, out: &TradeMatrix) {
        self.retained_total = out.total();
        self.coverage.countries_after = out.n_countries();
        self.coverage.products_after = out.n_products();
        self.coverage.retained_trade_share = share(self.retained_total, self.input_total);
    }

    /// Value removed by drops and cell rounding.
    pub fn removed_total(&self) -> Decimal {
        self.cells_zeroed_value
            + self
                .countries_dropped
                .iter()
                .chain(&self.products_dropped)
                .map(|d| d.value)
                .sum::<Decimal>()
    }

    /// `retained + removed == input`, exactly.
    pub fn is_balanced(&self) -> bool {
        self.retained_total + self.removed_total() == self.input_total
    }

    /// Chains a report for a later stage onto this one.
    pub fn then(mut self, later: FilterReport) -> FilterReport {
        self.filter_order.extend(later.filter_order);
        self.countries_dropped.extend(later.countries_dropped);
        self.products_dropped.extend(later.products_dropped);
        self.cells_zeroed += later.cells_zeroed;
        self.cells_zeroed_value += later.cells_zeroed_value;
        self.retained_total = later.retained_total;
        self.coverage.countries_after = later.coverage.countries_after;
        self.coverage.products_after = later.coverage.products_after;
        self.coverage.retained_trade_share = share(self.retained_total, self.input_total);
        self.passes += later.passes;
        self.second_pass_changes = later.second_pass_changes;
        self
    }
}

fn share(part: Decimal, whole: Decimal) -> f64 {
    if whole.is_zero() {
        return 0.0;
    }
    (part / whole).to_f64().unwrap_or(f64::NAN)
}

/// Total exports per country in `year`, from raw records.
pub fn reference_exports(records: &[TradeRecord], year: i32) -> BTreeMap<String, Decimal> {
    let mut out: BTreeMap<String, Decimal> = BTreeMap::new();
    for r in records.iter().filter(|r| r.year == year) {
        *out.entry(r.country.clone()).or_default() += r.value;
    }
    out
}

/// Static screen using the matrix's own row totals as reference-year exports.
/// Appropriate when `matrix` is the reference year.
pub fn apply_static_filters(
    matrix: &TradeMatrix,
    meta: &BTreeMap<String, CountryMeta>,
    cfg: &FilterConfig,
) -> Result<(TradeMatrix, FilterReport)> {
    let exports: BTreeMap<String, Decimal> = matrix.countries().iter().cloned().zip(matrix.row_totals()).collect();
    apply_static_filters_with_exports(matrix, meta, &exports, cfg)
}

/// Static screen: removes explicitly excluded countries, countries without
/// reference-year covariates, and countries at or below the population and
/// export thresholds. `meta` holds population-reference-year covariates and
/// `reference_exports` the export-reference-year totals.
pub fn apply_static_filters_with_exports(
    matrix: &TradeMatrix,
    meta: &BTreeMap<String, CountryMeta>,
    reference_exports: &BTreeMap<String, Decimal>,
    cfg: &FilterConfig,
) -> Result<(TradeMatrix, FilterReport)> {
    cfg.validate()?;
    let mut report = FilterReport::empty(matrix);
    report.filter_order = vec![
        "excluded_list".into(),
        "no_meta".into(),
        "population".into(),
        "exports".into(),
    ];
    let min_exports = FilterConfig::decimal(cfg.min_total_exports);
    let totals = matrix.row_totals();

    let mut keep = Vec::new();
    for (c, label) in matrix.countries().iter().enumerate() {
        let population = meta.get(label).and_then(|m| m.population);
        let reason = if cfg.excluded_countries.contains(label) {
            Some(DropReason::ExcludedList)
        } else if population.is_none() {
            Some(DropReason::NoMeta)
        } else if population.is_some_and(|p| p <= cfg.min_population) {
            Some(DropReason::Population)
        } else if reference_exports.get(label).copied().unwrap_or(Decimal::ZERO) <= min_exports {
            Some(DropReason::Exports)
        } else {
            None
        };
        match reason {
            Some(reason) => report.countries_dropped.push(DroppedEntity {
                label: label.clone(),
                reason,
                value: totals[c],
            }),
            None => keep.push(c),
        }
    }

    let all_products: Vec<usize> = (0..matrix.n_products()).collect();
    let out = drop_all_zero(matrix.select(&keep, &all_products), &mut report);
    if out.n_countries() == 0 || out.n_products() == 0 {
        return Err(Error::DegenerateSample(format!(
            "static filters removed every {} in {}",
            if out.n_countries() == 0 { "country" } else { "product" },
            matrix.year()
        )));
    }
    report.finish(&out);
    Ok((out, report))
}

/// Runs the four yearly filters (see module docs). A single pass unless
/// `cfg.iterate_to_fixed_point` is set; the report says whether another pass
/// would change the sample.
pub fn apply_yearly_filters(matrix: &TradeMatrix, cfg: &FilterConfig) -> Result<(TradeMatrix, FilterReport)> {
    cfg.validate()?;
    if matrix.n_countries() == 0 || matrix.n_products() == 0 {
        return Err(Error::DegenerateSample(format!("empty matrix for {}", matrix.year())));
    }
    let mut report = FilterReport::empty(matrix);
    report.filter_order = FILTER_ORDER.iter().map(|s| s.to_string()).collect();

    let mut current = matrix.clone();
    loop {
        let (next, changed) = yearly_pass(&current, cfg, &mut report)?;
        report.passes += 1;
        current = next;
        if !changed || !cfg.iterate_to_fixed_point || report.passes >= 1000 {
            break;
        }
    }
    let mut probe = FilterReport::empty(&current);
    report.second_pass_changes = match yearly_pass(&current, cfg, &mut probe) {
        Ok((_, changed)) => changed,
        Err(_) => true,
    };
    report.finish(&current);
    Ok((current, report))
}

fn yearly_pass(matrix: &TradeMatrix, cfg: &FilterConfig, report: &mut FilterReport) -> Result<(TradeMatrix, bool)> {
    let min_cell = FilterConfig::decimal(cfg.min_cell_value);
    let min_global = FilterConfig::decimal(cfg.min_product_global_exports);
    let mut changed = false;

    // (1) round small cells to zero
    let mut m = matrix.clone();
    m.map_cells(|_, _, v| {
        if v < min_cell {
            report.cells_zeroed += 1;
            report.cells_zeroed_value += v;
            changed = true;
            Decimal::ZERO
        } else {
            v
        }
    });

    let n_countries = m.n_countries();
    let col_totals = m.column_totals();
    let col_nonzero = m.column_nonzero_counts();
    let mut product_kept = vec![true; m.n_products()];

    // (2) global minimum
    for p in 0..m.n_products() {
        if col_totals[p] < min_global {
            product_kept[p] = false;
            report.products_dropped.push(DroppedEntity {
                label: m.products()[p].clone(),
                reason: DropReason::GlobalMin,
                value: col_totals[p],
            });
        }
    }

    // (3) product zero share across countries
    for p in 0..m.n_products() {
        if !product_kept[p] {
            continue;
        }
        let zero_share = (n_countries - col_nonzero[p]) as f64 / n_countries as f64;
        if zero_share > cfg.product_zero_share_max {
            product_kept[p] = false;
            report.products_dropped.push(DroppedEntity {
                label: m.products()[p].clone(),
                reason: DropReason::ProductZeroShare,
                value: col_totals[p],
            });
        }
    }

    // (4) country zero share across remaining products
    let remaining = product_kept.iter().filter(|&&k| k).count();
    let mut country_kept = vec![true; n_countries];
    if remaining > 0 {
        for (c, kept) in country_kept.iter_mut().enumerate() {
            let (nonzero, value) = m
                .row(c)
                .iter()
                .filter(|&&(p, _)| product_kept[p])
                .fold((0usize, Decimal::ZERO), |(n, s), &(_, v)| (n + 1, s + v));
            let zero_share = (remaining - nonzero) as f64 / remaining as f64;
            if zero_share >= cfg.country_zero_share_max {
                *kept = false;
                report.countries_dropped.push(DroppedEntity {
                    label: m.countries()[c].clone(),
                    reason: DropReason::CountryZeroShare,
                    value,
                });
            }
        }
    }

    let keep_c: Vec<usize> = (0..n_countries).filter(|&c| country_kept[c]).collect();
    let keep_p: Vec<usize> = (0..m.n_products()).filter(|&p| product_kept[p]).collect();
    changed |= keep_c.len() != n_countries || keep_p.len() != m.n_products();
    let before = report.countries_dropped.len() + report.products_dropped.len();
    let out = drop_all_zero(m.select(&keep_c, &keep_p), report);
    changed |= report.countries_dropped.len() + report.products_dropped.len() != before;

    if out.n_countries() == 0 || out.n_products() == 0 {
        return Err(Error::DegenerateSample(format!(
            "yearly filters removed every {} in {}",
            if out.n_countries() == 0 { "country" } else { "product" },
            matrix.year()
        )));
    }
    Ok((out, changed))
}

fn drop_all_zero(m: TradeMatrix, report: &mut FilterReport) -> TradeMatrix {
    let empty_r = m.empty_rows();
    let empty_p = m.empty_columns();
    if empty_r.is_empty() && empty_p.is_empty() {
        return m;
    }
    for &c in &empty_r {
        report.countries_dropped.push(DroppedEntity {
            label: m.countries()[c].clone(),
            reason: DropReason::AllZero,
            value: Decimal::ZERO,
        });
    }
    for &p in &empty_p {
        report.products_dropped.push(DroppedEntity {
            label: m.products()[p].clone(),
            reason: DropReason::AllZero,
            value: Decimal::ZERO,
        });
    }
    let keep_c: Vec<usize> = (0..m.n_countries()).filter(|c| !empty_r.contains(c)).collect();
    let keep_p: Vec<usize> = (0..m.n_products()).filter(|p| !empty_p.contains(p)).collect();
    m.select(&keep_c, &keep_p)
}
