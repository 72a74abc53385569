//! Run configuration: one TOML file, optionally overridden from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use ecomplex::complexity::{MetricName, SolverConfig};
use ecomplex::econometrics::{Estimator, Formula, PanelSpec, PeriodConvention};
use ecomplex::synthetic::WorldConfig;
use ecomplex::trade_data::{FilterConfig, Scheme, TradeCsvOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Years processed by filter/compute/correlate/rank. Empty means every
    /// year present in the trade file.
    pub years: Vec<i32>,
    pub inputs: Inputs,
    pub filter: FilterConfig,
    pub metrics: MetricsConfig,
    pub correlate: CorrelateConfig,
    pub regress: RegressConfig,
    pub predict: PredictConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            years: Vec::new(),
            inputs: Inputs::default(),
            filter: FilterConfig::default(),
            metrics: MetricsConfig::default(),
            correlate: CorrelateConfig::default(),
            regress: RegressConfig::default(),
            predict: PredictConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub trade: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
    /// Governance indicators, merged into the covariates by (country, year).
    pub governance: Option<PathBuf>,
    pub scheme: Scheme,
    pub csv: TradeCsvOptions,
    /// Generate a seeded toy world instead of reading files.
    pub synthetic: Option<SyntheticInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticInput {
    pub seed: u64,
    pub n_countries: usize,
    pub n_products: usize,
    pub start_year: i32,
    pub end_year: i32,
}

impl Default for SyntheticInput {
    fn default() -> Self {
        let w = WorldConfig::default();
        SyntheticInput {
            seed: w.seed,
            n_countries: w.n_countries,
            n_products: w.n_products,
            start_year: w.start_year,
            end_year: w.end_year,
        }
    }
}

impl SyntheticInput {
    pub fn world(&self) -> WorldConfig {
        WorldConfig {
            seed: self.seed,
            n_countries: self.n_countries,
            n_products: self.n_products,
            start_year: self.start_year,
            end_year: self.end_year,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub names: Vec<MetricName>,
    pub solver: SolverConfig,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        use MetricName::*;
        MetricsConfig {
            names: vec![Eci, Pci, Fitness, Q, EciPlus, PciPlus],
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateConfig {
    pub pairs: Vec<(MetricName, MetricName)>,
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        use MetricName::*;
        CorrelateConfig {
            pairs: vec![(EciPlus, Eci), (Fitness, Eci), (Fitness, EciPlus)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressConfig {
    /// Template; `horizon` and `metric` are replaced per table column.
    pub panel: PanelSpec,
    pub horizons: Vec<u32>,
    pub metrics: Vec<MetricName>,
    pub estimators: Vec<Estimator>,
    pub formulas: Vec<Formula>,
}

impl Default for RegressConfig {
    fn default() -> Self {
        use MetricName::*;
        RegressConfig {
            panel: PanelSpec::default(),
            horizons: vec![40, 20, 5],
            metrics: vec![EciPlus, Eci, Fitness],
            estimators: vec![Estimator::PooledOls, Estimator::FixedEffects],
            formulas: vec![Formula::default()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub horizon: u32,
    pub metrics: Vec<MetricName>,
    /// Name of a formula in `regress.formulas`.
    pub formula: String,
    /// Year of the features; defaults to the panel end year.
    pub base_year: Option<i32>,
    pub convention: PeriodConvention,
}

impl Default for PredictConfig {
    fn default() -> Self {
        use MetricName::*;
        PredictConfig {
            horizon: 20,
            metrics: vec![EciPlus, Eci, Fitness],
            formula: "base".into(),
            base_year: None,
            convention: PeriodConvention::Latest,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub years: Vec<i32>,
    pub metrics: Vec<MetricName>,
    pub horizon: Option<u32>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Reads `path`; relative input paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.inputs.trade,
            &mut cfg.inputs.covariates,
            &mut cfg.inputs.governance,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if !o.years.is_empty() {
            self.years = o.years.clone();
            if let [y] = o.years[..] {
                self.predict.base_year = Some(y);
            }
        }
        if !o.metrics.is_empty() {
            self.metrics.names = o.metrics.clone();
            self.regress.metrics = o
                .metrics
                .iter()
                .copied()
                .filter(|m| m.axis() == ecomplex::complexity::Axis::Country)
                .collect();
            self.predict.metrics = self.regress.metrics.clone();
        }
        if let Some(h) = o.horizon {
            self.regress.horizons = vec![h];
            self.predict.horizon = h;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg_err = |e: ecomplex::Error| match e {
            ecomplex::Error::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Config(other.to_string()),
        };
        if self.inputs.trade.is_none() && self.inputs.synthetic.is_none() {
            return Err(CliError::Config(
                "inputs.trade is required (or inputs.synthetic)".into(),
            ));
        }
        self.filter.validate().map_err(cfg_err)?;
        self.metrics.solver.validate().map_err(cfg_err)?;
        if self.metrics.names.is_empty() {
            return Err(CliError::Config("metrics.names is empty".into()));
        }
        for (a, b) in &self.correlate.pairs {
            if a.axis() != b.axis() {
                return Err(CliError::Config(format!(
                    "cannot correlate {a} with {b}: different axes"
                )));
            }
        }
        for m in self.regress.metrics.iter().chain(&self.predict.metrics) {
            if m.axis() != ecomplex::complexity::Axis::Country {
                return Err(CliError::Config(format!(
                    "{m} is a product metric and cannot enter a growth regression"
                )));
            }
        }
        for h in self.regress.horizons.iter().chain([&self.predict.horizon]) {
            self.panel_for(*h, MetricName::EciPlus).validate().map_err(cfg_err)?;
        }
        let mut names: Vec<&str> = Vec::new();
        for f in &self.regress.formulas {
            f.validate().map_err(cfg_err)?;
            if names.contains(&f.name.as_str()) {
                return Err(CliError::Config(format!("duplicate formula name `{}`", f.name)));
            }
            names.push(&f.name);
        }
        self.prediction_formula()?;
        Ok(())
    }

    pub fn panel_for(&self, horizon: u32, metric: MetricName) -> PanelSpec {
        PanelSpec {
            horizon,
            metric,
            ..self.regress.panel.clone()
        }
    }

    pub fn prediction_formula(&self) -> Result<&Formula, CliError> {
        self.regress
            .formulas
            .iter()
            .find(|f| f.name == self.predict.formula)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "predict.formula `{}` is not among regress.formulas",
                    self.predict.formula
                ))
            })
    }

    /// SHA-256 of the effective configuration with the output directory
    /// left out, so the same run written elsewhere carries the same hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
