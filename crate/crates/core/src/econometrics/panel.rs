//! Growth panels: initial covariates and metrics per country-period, with
//! the annualized growth realized over the period.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::complexity::{IterationDiagnostics, MetricName, MetricVector};
use crate::error::{Error, Result};
use crate::trade_data::{Governance, MetaTable};

/// Compound annualized growth rate.
pub fn cagr(gdp_start: f64, gdp_end: f64, years: u32) -> Result<f64> {
    if !(gdp_start > 0.0 && gdp_end > 0.0) {
        return Err(Error::domain(format!(
            "CAGR needs positive GDP, got {gdp_start} -> {gdp_end}"
        )));
    }
    if years == 0 {
        return Err(Error::domain("CAGR needs at least one year"));
    }
    Ok((gdp_end / gdp_start).powf(1.0 / f64::from(years)) - 1.0)
}

/// Z-scores with population SD. Needs at least two distinct values.
pub fn standardize(values: &MetricVector) -> Result<MetricVector> {
    let z = zscore(&values.values)
        .ok_or_else(|| Error::domain(format!("cannot standardize {}: zero variance", values.name)))?;
    Ok(MetricVector {
        values: z,
        ..values.clone()
    })
}

fn zscore(v: &[f64]) -> Option<Vec<f64>> {
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) || v.iter().all(|&x| x == v[0]) {
        return None;
    }
    Some(v.iter().map(|x| (x - mean) / sd).collect())
}

/// How raw covariates enter the regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovariateTransforms {
    pub log_gdp: bool,
    /// Population is divided by this (1e6 gives millions).
    pub population_unit: f64,
    pub log_capital: bool,
}

impl Default for CovariateTransforms {
    fn default() -> Self {
        CovariateTransforms {
            log_gdp: true,
            population_unit: 1e6,
            log_capital: true,
        }
    }
}

pub const CONTROLS: [&str; 3] = ["human_capital", "population", "capital_per_worker"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSpec {
    pub start_year: i32,
    pub end_year: i32,
    pub horizon: u32,
    /// Keep only countries observed in every period.
    pub balanced: bool,
    pub metric: MetricName,
    /// Any of [`CONTROLS`] and the governance column names.
    pub controls: Vec<String>,
    /// Z-score the metric within each period.
    pub standardize_metric: bool,
    pub transforms: CovariateTransforms,
}

impl Default for PanelSpec {
    fn default() -> Self {
        PanelSpec {
            start_year: 1973,
            end_year: 2013,
            horizon: 5,
            balanced: true,
            metric: MetricName::EciPlus,
            controls: CONTROLS.iter().map(|s| s.to_string()).collect(),
            standardize_metric: false,
            transforms: CovariateTransforms::default(),
        }
    }
}

impl PanelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1 year".into()));
        }
        if self.end_year <= self.start_year {
            return Err(Error::InvalidConfig(format!(
                "end_year {} must be after start_year {}",
                self.end_year, self.start_year
            )));
        }
        if self.balanced && (self.end_year - self.start_year) % self.horizon as i32 != 0 {
            return Err(Error::InvalidConfig(format!(
                "balanced panel: {}-{} is not a multiple of the {}-year horizon",
                self.start_year, self.end_year, self.horizon
            )));
        }
        for c in &self.controls {
            if !is_control(c) {
                return Err(Error::InvalidConfig(format!("unknown control `{c}`")));
            }
        }
        if !(self.transforms.population_unit > 0.0) {
            return Err(Error::InvalidConfig("population_unit must be positive".into()));
        }
        Ok(())
    }

    /// Period start years: start, start + h, ... while the period ends by `end_year`.
    pub fn periods(&self) -> Vec<i32> {
        let h = self.horizon as i32;
        (0..)
            .map(|k| self.start_year + k * h)
            .take_while(|t| t + h <= self.end_year)
            .collect()
    }
}

pub fn is_control(name: &str) -> bool {
    CONTROLS.contains(&name) || Governance::COLUMNS.contains(&name)
}

/// One country-period row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub country: String,
    pub period_start: i32,
    pub horizon: u32,
    /// Annualized growth over the period; absent for prediction features.
    pub growth: Option<f64>,
    pub initial_log_gdp_pc: f64,
    pub initial_metric: f64,
    /// `initial_log_gdp_pc * initial_metric`.
    pub interaction: f64,
    pub initial_human_capital: Option<f64>,
    /// In units of `population_unit`.
    pub initial_population: Option<f64>,
    pub initial_capital_per_worker: Option<f64>,
    pub governance: Governance,
}

impl PanelObservation {
    /// Value of a named regressor, as used in regression coefficient names.
    pub fn feature(&self, name: &str) -> Option<f64> {
        match name {
            "initial_metric" => Some(self.initial_metric),
            "gdp_x_metric" => Some(self.interaction),
            "initial_log_gdp_pc" => Some(self.initial_log_gdp_pc),
            "human_capital" => self.initial_human_capital,
            "population" => self.initial_population,
            "capital_per_worker" => self.initial_capital_per_worker,
            other => self.governance.get(other),
        }
    }

    /// Sets the metric and recomputes the interaction.
    pub fn set_metric(&mut self, value: f64) {
        self.initial_metric = value;
        self.interaction = self.initial_log_gdp_pc * value;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub country: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub observations: Vec<PanelObservation>,
    pub periods: Vec<i32>,
    pub excluded: Vec<Exclusion>,
}

/// Builds the country-period panel. `metrics` maps a year to the metric
/// vector for that year.
pub fn build_panel(metrics: &BTreeMap<i32, MetricVector>, meta: &MetaTable, spec: &PanelSpec) -> Result<Panel> {
    spec.validate()?;
    let periods = spec.periods();
    let countries: BTreeSet<&str> = periods
        .iter()
        .filter_map(|t| metrics.get(t))
        .flat_map(|m| m.labels.iter().map(String::as_str))
        .collect();

    let mut rows: BTreeMap<&str, Vec<PanelObservation>> = BTreeMap::new();
    let mut first_miss: BTreeMap<&str, String> = BTreeMap::new();
    for &country in &countries {
        for &t in &periods {
            match observation(country, t, metrics, meta, spec, true) {
                Ok(o) => rows.entry(country).or_default().push(o),
                Err(reason) => {
                    first_miss.entry(country).or_insert(reason);
                }
            }
        }
    }

    let mut excluded = Vec::new();
    let mut observations = Vec::new();
    for &country in &countries {
        let obs = rows.remove(country).unwrap_or_default();
        if spec.balanced && obs.len() < periods.len() {
            excluded.push(Exclusion {
                country: country.to_string(),
                reason: first_miss.remove(country).unwrap_or_else(|| "incomplete".into()),
            });
            continue;
        }
        observations.extend(obs);
    }
    if observations.is_empty() {
        return Err(Error::EmptyPanel(format!(
            "no complete observations for {} over {}-{} (h={}); {} countries excluded",
            spec.metric,
            spec.start_year,
            spec.end_year,
            spec.horizon,
            excluded.len()
        )));
    }
    if spec.standardize_metric {
        standardize_by_period(&mut observations)?;
    }
    observations.sort_by(|a, b| (a.period_start, &a.country).cmp(&(b.period_start, &b.country)));
    Ok(Panel {
        observations,
        periods,
        excluded,
    })
}

/// Features at `year` for out-of-sample prediction (`growth` is `None`).
/// Countries lacking a required input are returned in the second list.
pub fn prediction_features(
    metric: &MetricVector,
    meta: &MetaTable,
    spec: &PanelSpec,
    year: i32,
) -> Result<(Vec<PanelObservation>, Vec<Exclusion>)> {
    let metrics: BTreeMap<i32, MetricVector> = [(year, metric.clone())].into_iter().collect();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for country in &metric.labels {
        match observation(country, year, &metrics, meta, spec, false) {
            Ok(o) => out.push(o),
            Err(reason) => skipped.push(Exclusion {
                country: country.clone(),
                reason,
            }),
        }
    }
    if spec.standardize_metric && !out.is_empty() {
        standardize_by_period(&mut out)?;
    }
    Ok((out, skipped))
}

fn standardize_by_period(obs: &mut [PanelObservation]) -> Result<()> {
    let periods: BTreeSet<i32> = obs.iter().map(|o| o.period_start).collect();
    for t in periods {
        let idx: Vec<usize> = (0..obs.len()).filter(|&i| obs[i].period_start == t).collect();
        let vals: Vec<f64> = idx.iter().map(|&i| obs[i].initial_metric).collect();
        let z = zscore(&vals).ok_or_else(|| Error::domain(format!("metric has zero variance in period {t}")))?;
        for (&i, v) in idx.iter().zip(z) {
            obs[i].set_metric(v);
        }
    }
    Ok(())
}

fn observation(
    country: &str,
    t: i32,
    metrics: &BTreeMap<i32, MetricVector>,
    meta: &MetaTable,
    spec: &PanelSpec,
    with_growth: bool,
) -> std::result::Result<PanelObservation, String> {
    let metric = metrics
        .get(&t)
        .and_then(|m| m.get(country))
        .ok_or_else(|| format!("missing {} in {t}", spec.metric))?;
    let start = meta
        .get(country, t)
        .ok_or_else(|| format!("missing covariates in {t}"))?;
    let gdp0 = start.gdp_pc.ok_or_else(|| format!("missing gdp_pc in {t}"))?;
    let growth = if with_growth {
        let t1 = t + spec.horizon as i32;
        let gdp1 = meta
            .get(country, t1)
            .and_then(|m| m.gdp_pc)
            .ok_or_else(|| format!("missing gdp_pc in {t1}"))?;
        Some(cagr(gdp0, gdp1, spec.horizon).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let tr = &spec.transforms;
    let log_gdp = if tr.log_gdp { gdp0.ln() } else { gdp0 };
    let capital = match start.capital_per_worker {
        Some(k) if tr.log_capital && k <= 0.0 => return Err(format!("nonpositive capital_per_worker in {t}")),
        Some(k) if tr.log_capital => Some(k.ln()),
        other => other,
    };
    let mut o = PanelObservation {
        country: country.to_string(),
        period_start: t,
        horizon: spec.horizon,
        growth,
        initial_log_gdp_pc: log_gdp,
        initial_metric: 0.0,
        interaction: 0.0,
        initial_human_capital: start.human_capital,
        initial_population: start.population.map(|p| p / tr.population_unit),
        initial_capital_per_worker: capital,
        governance: start.governance,
    };
    o.set_metric(metric);
    for c in &spec.controls {
        if o.feature(c).is_none() {
            return Err(format!("missing {c} in {t}"));
        }
    }
    Ok(o)
}

/// A country-axis metric vector from `(label, value)` pairs.
pub fn country_metric(name: MetricName, values: &[(&str, f64)]) -> MetricVector {
    MetricVector::new(
        name,
        values.iter().map(|(c, _)| c.to_string()).collect(),
        values.iter().map(|(_, v)| *v).collect(),
        IterationDiagnostics::direct(),
    )
}
