//! Metric vectors, solver settings, and iteration diagnostics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Country,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Diversity,
    Ubiquity,
    Eci,
    Pci,
    Fitness,
    Q,
    EciPlus,
    PciPlus,
}

impl MetricName {
    pub const ALL: [MetricName; 8] = [
        MetricName::Diversity,
        MetricName::Ubiquity,
        MetricName::Eci,
        MetricName::Pci,
        MetricName::Fitness,
        MetricName::Q,
        MetricName::EciPlus,
        MetricName::PciPlus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Diversity => "diversity",
            MetricName::Ubiquity => "ubiquity",
            MetricName::Eci => "eci",
            MetricName::Pci => "pci",
            MetricName::Fitness => "fitness",
            MetricName::Q => "q",
            MetricName::EciPlus => "eci_plus",
            MetricName::PciPlus => "pci_plus",
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            MetricName::Diversity | MetricName::Eci | MetricName::Fitness | MetricName::EciPlus => Axis::Country,
            _ => Axis::Product,
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('+', "_plus").replace('-', "_");
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .or(match norm.as_str() {
                "eciplus" => Some(MetricName::EciPlus),
                "pciplus" => Some(MetricName::PciPlus),
                "f" => Some(MetricName::Fitness),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

/// Convergence settings for the iterative maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub iterations: usize,
    /// Max absolute change in the last step (log-change for ECI+/PCI+,
    /// eigen-residual for ECI/PCI).
    pub final_residual: f64,
    pub converged: bool,
    pub tolerance: f64,
    /// Labels whose values were clamped to the floor.
    pub degenerate_entities: Vec<String>,
    /// Warnings such as `degenerate_spectrum` or `reducible`.
    pub flags: Vec<String>,
    /// Labels removed before computing (empty rows/columns).
    pub dropped: Vec<String>,
    /// Selected eigenvalue (ECI/PCI only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
}

impl IterationDiagnostics {
    /// Diagnostics for a closed-form computation.
    pub fn direct() -> Self {
        IterationDiagnostics {
            converged: true,
            ..Default::default()
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

/// Scores for one axis of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub name: MetricName,
    pub axis: Axis,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub diagnostics: IterationDiagnostics,
}

impl MetricVector {
    pub fn new(name: MetricName, labels: Vec<String>, values: Vec<f64>, diagnostics: IterationDiagnostics) -> Self {
        debug_assert_eq!(labels.len(), values.len());
        MetricVector {
            name,
            axis: name.axis(),
            labels,
            values,
            diagnostics,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.labels.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    /// Labels ordered by descending value, ties broken by label.
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.values[b]
                .total_cmp(&self.values[a])
                .then_with(|| self.labels[a].cmp(&self.labels[b]))
        });
        idx.into_iter().map(|i| self.labels[i].as_str()).collect()
    }

    /// Writes `label,value` rows. Values use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", self.name.as_str()])?;
        for (l, v) in self.iter() {
            w.write_record([l, &v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads a file written by [`MetricVector::write_csv`]; diagnostics are not restored.
    pub fn read_csv<R: std::io::Read>(name: MetricName, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let v: f64 = row
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::domain(format!("line {line}: bad metric value")))?;
            labels.push(row.get(0).unwrap_or("").to_string());
            values.push(v);
        }
        Ok(MetricVector::new(name, labels, values, IterationDiagnostics::direct()))
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean and population standard deviation.
pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    cov / (sa * sb)
}
