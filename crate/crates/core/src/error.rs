use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Diagnostic for a single input row that was rejected during ingestion.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub reason: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("{} rows rejected, error budget is {budget}: {}", .rejected.len(), format_rows(.rejected))]
    ErrorBudgetExceeded {
        budget: usize,
        rejected: Vec<RowDiagnostic>,
    },
    #[error("no trade records for year {0}")]
    EmptyYear(i32),
    #[error("degenerate_sample: {0}")]
    DegenerateSample(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("rank-deficient design matrix, collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("absorbed_by_fixed_effects: {}", .0.join(", "))]
    AbsorbedByFixedEffects(Vec<String>),
    #[error("missing feature `{feature}` for {country}")]
    MissingFeature { country: String, feature: String },
    #[error("empty panel: {0}")]
    EmptyPanel(String),
}

fn format_rows(rows: &[RowDiagnostic]) -> String {
    const SHOWN: usize = 20;
    let mut s = rows
        .iter()
        .take(SHOWN)
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if rows.len() > SHOWN {
        s.push_str(&format!("; ... and {} more", rows.len() - SHOWN));
    }
    s
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
