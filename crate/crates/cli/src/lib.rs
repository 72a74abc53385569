//! Config-driven front end for the `ecomplex` library.
//!
//! Every subcommand reads one TOML run configuration, applies command-line
//! overrides, and writes CSV/JSON/text under the output directory. Each file
//! carries the SHA-256 of the effective configuration.

pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ecomplex::complexity::MetricName;
use thiserror::Error;

pub use config::{Overrides, RunConfig};
pub use output::Output;
pub use pipeline::Pipeline;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}")]
    Data {
        context: String,
        #[source]
        source: ecomplex::Error,
    },
    #[error("cannot write {}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn data(context: impl Into<String>, source: ecomplex::Error) -> Self {
        CliError::Data {
            context: context.into(),
            source,
        }
    }

    /// 1 for usage and configuration problems, 2 for data and domain errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data {
                source: ecomplex::Error::InvalidConfig(_),
                ..
            } => 1,
            CliError::Data { .. } | CliError::Output { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ecomplex",
    version,
    about = "Economic complexity metrics and growth regressions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Restrict to these years (repeatable).
    #[arg(long, global = true, value_delimiter = ',')]
    pub year: Vec<i32>,
    /// Metrics to compute or model (repeatable, comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub metric: Vec<String>,
    /// Growth horizon in years for regress and predict.
    #[arg(long, global = true)]
    pub horizon: Option<u32>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Apply the static and yearly filters; write matrices and reports.
    Filter,
    /// Compute metric vectors and solver diagnostics per year.
    Compute,
    /// Correlate metric pairs per year.
    Correlate,
    /// Fit growth regressions; write JSON and text tables.
    Regress,
    /// Rank countries by predicted growth, one file per metric.
    Predict,
    /// Rank labels by each metric per year.
    Rank,
    /// Every stage in order.
    Run,
}

/// Builds the effective configuration: defaults, then file, then flags.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let metrics = common
        .metric
        .iter()
        .map(|s| s.parse::<MetricName>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    cfg.apply(&Overrides {
        years: common.year.clone(),
        metrics,
        horizon: common.horizon,
        out_dir: common.out.clone(),
    });
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and returns the files written, relative to the
/// output directory.
pub fn execute(command: Command, cfg: RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Output::new(cfg.out_dir.clone(), cfg.hash());
    let mut p = Pipeline::load(cfg)?;
    match command {
        Command::Filter => p.filter(&mut out)?,
        Command::Compute => p.compute(&mut out)?,
        Command::Correlate => p.correlate(&mut out)?,
        Command::Regress => {
            p.regress(&mut out)?;
        }
        Command::Predict => {
            p.predict(&mut out)?;
        }
        Command::Rank => p.rank(&mut out)?,
        Command::Run => p.run_all(&mut out)?,
    }
    Ok(out.written().to_vec())
}

pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve_config(&cli.common)?;
    execute(cli.command, cfg)
}
