//! Stage runners. Each stage computes what it needs from the inputs (filtered
//! matrices and metric vectors are cached in memory) and writes only its own
//! outputs.

use std::collections::{BTreeMap, BTreeSet};

use ecomplex::complexity::{compute_metrics, correlate, MetricName, MetricVector};
use ecomplex::econometrics::{
    build_panel, fixed_effects, pooled_ols, predict_batch, prediction_features, render_table, Estimator, Exclusion,
    Formula, Prediction, RegressionResult, SkippedPrediction,
};
use ecomplex::synthetic::synthetic_world;
use ecomplex::trade_data::{
    apply_static_filters_with_exports, apply_yearly_filters, build_matrix, load_covariates_csv, load_trade_csv_with,
    reference_exports, CountryMeta, FilterConfig, FilterReport, MetaTable, TradeMatrix, TradeRecord,
};
use rayon::prelude::*;
use rust_decimal::Decimal;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Output;
use crate::CliError;

pub struct Pipeline {
    cfg: RunConfig,
    by_year: BTreeMap<i32, Vec<TradeRecord>>,
    meta: MetaTable,
    ref_meta: BTreeMap<String, CountryMeta>,
    ref_exports: BTreeMap<String, Decimal>,
    filtered: BTreeMap<i32, (TradeMatrix, FilterReport)>,
    metrics: BTreeMap<(i32, MetricName), MetricVector>,
}

impl Pipeline {
    pub fn load(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let (records, mut meta) = match &cfg.inputs.synthetic {
            Some(s) => {
                let w = synthetic_world(&s.world());
                (w.records, w.meta)
            }
            None => {
                let path = cfg.inputs.trade.as_ref().expect("validated");
                let loaded = load_trade_csv_with(path, cfg.inputs.scheme, &cfg.inputs.csv)
                    .map_err(|e| CliError::data(format!("loading {}", path.display()), e))?;
                for r in &loaded.rejected {
                    eprintln!("warning: {}: rejected {r}", path.display());
                }
                let meta = match &cfg.inputs.covariates {
                    Some(p) => {
                        load_covariates_csv(p).map_err(|e| CliError::data(format!("loading {}", p.display()), e))?
                    }
                    None => MetaTable::new(),
                };
                (loaded.records, meta)
            }
        };
        if let Some(p) = &cfg.inputs.governance {
            let g = load_covariates_csv(p).map_err(|e| CliError::data(format!("loading {}", p.display()), e))?;
            meta.merge_governance(&g);
        }

        let ref_meta = meta.for_year(cfg.filter.population_reference_year);
        let ref_exports = reference_exports(&records, cfg.filter.exports_reference_year);
        let mut by_year: BTreeMap<i32, Vec<TradeRecord>> = BTreeMap::new();
        for r in records {
            by_year.entry(r.year).or_default().push(r);
        }
        Ok(Pipeline {
            cfg,
            by_year,
            meta,
            ref_meta,
            ref_exports,
            filtered: BTreeMap::new(),
            metrics: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// Configured years, or every year in the trade data.
    pub fn years(&self) -> Vec<i32> {
        if self.cfg.years.is_empty() {
            self.by_year.keys().copied().collect()
        } else {
            self.cfg.years.clone()
        }
    }

    pub fn ensure_filtered(&mut self, years: &[i32]) -> Result<(), CliError> {
        let todo: Vec<i32> = years
            .iter()
            .copied()
            .filter(|y| !self.filtered.contains_key(y))
            .collect();
        let results: Vec<_> = todo
            .par_iter()
            .map(|&y| {
                let records = self.by_year.get(&y).map(Vec::as_slice).unwrap_or(&[]);
                (
                    y,
                    filter_year(records, y, &self.ref_meta, &self.ref_exports, &self.cfg.filter),
                )
            })
            .collect();
        for (y, r) in results {
            let r = r.map_err(|e| CliError::data(format!("filtering {y}"), e))?;
            self.filtered.insert(y, r);
        }
        Ok(())
    }

    pub fn ensure_metrics(&mut self, years: &[i32], names: &[MetricName]) -> Result<(), CliError> {
        self.ensure_filtered(years)?;
        let todo: Vec<(i32, Vec<MetricName>)> = years
            .iter()
            .map(|&y| {
                let missing: Vec<MetricName> = names
                    .iter()
                    .copied()
                    .filter(|m| !self.metrics.contains_key(&(y, *m)))
                    .collect();
                (y, missing)
            })
            .filter(|(_, m)| !m.is_empty())
            .collect();
        let solver = self.cfg.metrics.solver;
        let results: Vec<_> = todo
            .par_iter()
            .map(|(y, names)| (*y, compute_metrics(&self.filtered[y].0, names, &solver)))
            .collect();
        for (y, r) in results {
            let vectors = r.map_err(|e| CliError::data(format!("computing metrics for {y}"), e))?;
            for v in vectors {
                self.metrics.insert((y, v.name), v);
            }
        }
        Ok(())
    }

    pub fn filtered(&self, year: i32) -> Option<&(TradeMatrix, FilterReport)> {
        self.filtered.get(&year)
    }

    pub fn metric(&self, year: i32, name: MetricName) -> Option<&MetricVector> {
        self.metrics.get(&(year, name))
    }

    pub fn filter(&mut self, out: &mut Output) -> Result<(), CliError> {
        let years = self.years();
        self.ensure_filtered(&years)?;
        for y in years {
            let (m, report) = &self.filtered[&y];
            out.csv(format!("filtered/matrix_{y}.csv"), |w| m.write_csv(w))?;
            out.json(format!("filtered/report_{y}.json"), report)?;
        }
        Ok(())
    }

    pub fn compute(&mut self, out: &mut Output) -> Result<(), CliError> {
        let years = self.years();
        let names = self.cfg.metrics.names.clone();
        self.ensure_metrics(&years, &names)?;
        for y in years {
            for &n in &names {
                let v = &self.metrics[&(y, n)];
                out.csv(format!("metrics/{y}/{n}.csv"), |w| v.write_csv(w))?;
                if !matches!(n, MetricName::Diversity | MetricName::Ubiquity) {
                    out.json(format!("metrics/{y}/{n}.diagnostics.json"), &v.diagnostics)?;
                }
            }
        }
        Ok(())
    }

    pub fn correlate(&mut self, out: &mut Output) -> Result<(), CliError> {
        let years = self.years();
        let pairs = self.cfg.correlate.pairs.clone();
        let names: Vec<MetricName> = pairs
            .iter()
            .flat_map(|(a, b)| [*a, *b])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        self.ensure_metrics(&years, &names)?;
        for y in years {
            for (a, b) in &pairs {
                let r = correlate(&self.metrics[&(y, *a)], &self.metrics[&(y, *b)])
                    .map_err(|e| CliError::data(format!("correlating {a} with {b} in {y}"), e))?;
                let stem = format!("correlations/{y}/{a}__{b}");
                out.csv(format!("{stem}.csv"), |w| {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["label", a.as_str(), b.as_str()])?;
                    for p in &r.scatter {
                        c.write_record([p.label.clone(), p.a.to_string(), p.b.to_string()])?;
                    }
                    c.flush().map_err(|e| ecomplex::Error::Domain(e.to_string()))?;
                    Ok(())
                })?;
                let mut summary = r.clone();
                summary.scatter.clear();
                out.json(
                    format!("{stem}.json"),
                    &CorrelationSummary {
                        year: y,
                        report: summary,
                    },
                )?;
            }
        }
        Ok(())
    }

    pub fn rank(&mut self, out: &mut Output) -> Result<(), CliError> {
        let years = self.years();
        let names = self.cfg.metrics.names.clone();
        self.ensure_metrics(&years, &names)?;
        for y in years {
            for &n in &names {
                let v = &self.metrics[&(y, n)];
                out.csv(format!("rank/{y}/{n}.csv"), |w| write_ranking(v, w))?;
            }
        }
        Ok(())
    }

    /// Metric vectors for every period start of a panel that has trade data.
    fn panel_metrics(&mut self, horizon: u32, metric: MetricName) -> Result<BTreeMap<i32, MetricVector>, CliError> {
        let spec = self.cfg.panel_for(horizon, metric);
        let years: Vec<i32> = spec
            .periods()
            .into_iter()
            .filter(|y| self.by_year.contains_key(y))
            .collect();
        self.ensure_metrics(&years, &[metric])?;
        Ok(years.iter().map(|&y| (y, self.metrics[&(y, metric)].clone())).collect())
    }

    pub fn regress(&mut self, out: &mut Output) -> Result<Vec<RegressionTable>, CliError> {
        let horizons = self.cfg.regress.horizons.clone();
        let metrics = self.cfg.regress.metrics.clone();
        let mut tables = Vec::new();
        for &h in &horizons {
            let mut panels = BTreeMap::new();
            let mut exclusions = BTreeMap::new();
            for &m in &metrics {
                let spec = self.cfg.panel_for(h, m);
                let mv = self.panel_metrics(h, m)?;
                let panel = build_panel(&mv, &self.meta, &spec)
                    .map_err(|e| CliError::data(format!("building the {h}-year {m} panel"), e))?;
                for x in &panel.excluded {
                    eprintln!("note: h={h} {m}: excluded {} ({})", x.country, x.reason);
                }
                exclusions.insert(m, panel.excluded.clone());
                panels.insert(m, panel);
            }

            let formulas = self.cfg.regress.formulas.clone();
            let estimators = self.cfg.regress.estimators.clone();
            let fits: Vec<Result<Vec<Column>, CliError>> = formulas
                .par_iter()
                .map(|f| {
                    let mut cols = Vec::new();
                    for &m in &metrics {
                        for &est in &estimators {
                            cols.push(fit_column(&panels[&m], f, m, est, h)?);
                        }
                    }
                    Ok(cols)
                })
                .collect();
            for (f, cols) in formulas.iter().zip(fits) {
                let mut columns = cols?;
                for (i, c) in columns.iter_mut().filter(|c| c.result.is_some()).enumerate() {
                    c.title = format!("({}) {}", i + 1, c.title);
                }
                let table = RegressionTable {
                    horizon: h,
                    formula: f.clone(),
                    columns,
                    exclusions: exclusions.clone(),
                };
                let stem = format!("regress/h{h}_{}", f.name);
                out.json(format!("{stem}.json"), &table)?;
                out.text(format!("{stem}.txt"), &table.render())?;
                tables.push(table);
            }
        }
        Ok(tables)
    }

    pub fn predict(&mut self, out: &mut Output) -> Result<BTreeMap<MetricName, Vec<Prediction>>, CliError> {
        let h = self.cfg.predict.horizon;
        let formula = self.cfg.prediction_formula()?.clone();
        let convention = self.cfg.predict.convention;
        let mut all = BTreeMap::new();
        for m in self.cfg.predict.metrics.clone() {
            let spec = self.cfg.panel_for(h, m);
            let base = self.cfg.predict.base_year.unwrap_or(spec.end_year);
            let mv = self.panel_metrics(h, m)?;
            let ctx = |what: &str| format!("{what} for the {h}-year {m} prediction model");
            let panel =
                build_panel(&mv, &self.meta, &spec).map_err(|e| CliError::data(ctx("building the panel"), e))?;
            let model = pooled_ols(&panel.observations, &formula).map_err(|e| CliError::data(ctx("fitting"), e))?;

            self.ensure_metrics(&[base], &[m])?;
            let (features, missing) = prediction_features(&self.metrics[&(base, m)], &self.meta, &spec, base)
                .map_err(|e| CliError::data(ctx("preparing features"), e))?;
            let (ranked, unpredicted) = predict_batch(&model, &features, convention);
            let skipped: Vec<SkippedPrediction> = missing
                .into_iter()
                .map(|Exclusion { country, reason }| SkippedPrediction { country, reason })
                .chain(unpredicted)
                .collect();
            for s in &skipped {
                eprintln!("warning: {m} prediction skipped {}: {}", s.country, s.reason);
            }
            out.csv(format!("predict/{m}.csv"), |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["country", "predicted_growth", "rank"])?;
                for p in &ranked {
                    c.write_record([p.country.clone(), p.predicted_growth.to_string(), p.rank.to_string()])?;
                }
                c.flush().map_err(|e| ecomplex::Error::Domain(e.to_string()))?;
                Ok(())
            })?;
            out.json(
                format!("predict/{m}.summary.json"),
                &PredictionSummary {
                    metric: m,
                    horizon: h,
                    base_year: base,
                    formula: formula.name.clone(),
                    convention,
                    predicted: ranked.len(),
                    skipped,
                },
            )?;
            all.insert(m, ranked);
        }
        Ok(all)
    }

    /// Every stage in order.
    pub fn run_all(&mut self, out: &mut Output) -> Result<(), CliError> {
        self.filter(out)?;
        self.compute(out)?;
        self.correlate(out)?;
        self.rank(out)?;
        self.regress(out)?;
        self.predict(out)?;
        Ok(())
    }
}

fn filter_year(
    records: &[TradeRecord],
    year: i32,
    ref_meta: &BTreeMap<String, CountryMeta>,
    ref_exports: &BTreeMap<String, Decimal>,
    cfg: &FilterConfig,
) -> ecomplex::Result<(TradeMatrix, FilterReport)> {
    let m = build_matrix(records, year)?;
    if !cfg.static_filters {
        return apply_yearly_filters(&m, cfg);
    }
    let (screened, first) = apply_static_filters_with_exports(&m, ref_meta, ref_exports, cfg)?;
    let (out, second) = apply_yearly_filters(&screened, cfg)?;
    Ok((out, first.then(second)))
}

fn write_ranking(v: &MetricVector, w: &mut Vec<u8>) -> ecomplex::Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["rank", "label", v.name.as_str()])?;
    for (i, label) in v.ranking().into_iter().enumerate() {
        let value = v.get(label).expect("ranked label exists");
        c.write_record([(i + 1).to_string(), label.to_string(), value.to_string()])?;
    }
    c.flush().map_err(|e| ecomplex::Error::Domain(e.to_string()))?;
    Ok(())
}

fn fit_column(
    panel: &ecomplex::econometrics::Panel,
    formula: &Formula,
    metric: MetricName,
    estimator: Estimator,
    horizon: u32,
) -> Result<Column, CliError> {
    let label = match estimator {
        Estimator::PooledOls => "OLS",
        Estimator::FixedEffects => "FE",
    };
    let mut col = Column {
        title: format!("{metric} {label}"),
        metric,
        estimator,
        result: None,
        skipped: None,
    };
    if estimator == Estimator::FixedEffects && panel.periods.len() < 2 {
        col.skipped = Some("fixed effects need at least two periods".into());
        return Ok(col);
    }
    let fit = match estimator {
        Estimator::PooledOls => pooled_ols(&panel.observations, formula),
        Estimator::FixedEffects => fixed_effects(&panel.observations, formula),
    };
    let mut r = fit.map_err(|e| {
        CliError::data(
            format!("{label} for {metric}, h={horizon}, formula `{}`", formula.name),
            e,
        )
    })?;
    r.metric = Some(metric);
    col.result = Some(r);
    Ok(col)
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub title: String,
    pub metric: MetricName,
    pub estimator: Estimator,
    pub result: Option<RegressionResult>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionTable {
    pub horizon: u32,
    pub formula: Formula,
    pub columns: Vec<Column>,
    pub exclusions: BTreeMap<MetricName, Vec<Exclusion>>,
}

impl RegressionTable {
    pub fn render(&self) -> String {
        let (results, titles): (Vec<RegressionResult>, Vec<String>) = self
            .columns
            .iter()
            .filter_map(|c| c.result.clone().map(|r| (r, c.title.clone())))
            .unzip();
        let mut s = format!(
            "Annualized {}-year growth, formula `{}`\n\n",
            self.horizon, self.formula.name
        );
        s.push_str(&render_table(&results, &titles));
        for c in self.columns.iter().filter(|c| c.skipped.is_some()) {
            s.push_str(&format!(
                "{}: not estimated ({})\n",
                c.title,
                c.skipped.as_deref().unwrap_or("")
            ));
        }
        s
    }
}

#[derive(Serialize)]
struct CorrelationSummary {
    year: i32,
    #[serde(flatten)]
    report: ecomplex::complexity::CorrelationReport,
}

#[derive(Serialize)]
struct PredictionSummary {
    metric: MetricName,
    horizon: u32,
    base_year: i32,
    formula: String,
    convention: ecomplex::econometrics::PeriodConvention,
    predicted: usize,
    skipped: Vec<SkippedPrediction>,
}
