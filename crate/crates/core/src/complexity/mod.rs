//! Complexity metrics: RCA, diversity/ubiquity, ECI/PCI, Fitness/Q, ECI+/PCI+.

mod correlate;
mod eci;
mod eci_plus;
mod fitness;
mod metric;
mod rca;

pub use correlate::{correlate, CorrelationReport, ScatterPoint};
pub use eci::eci_pci;
pub use eci_plus::{eci_plus, eci_plus_observed, pci_plus, pci_plus_observed};
pub use fitness::{fitness, fitness_observed, FITNESS_FLOOR};
pub use metric::{Axis, IterationDiagnostics, MetricName, MetricVector, SolverConfig};
pub use rca::{binarize, diversity, rca, ubiquity, BinaryMatrix, RcaMatrix};

use crate::error::Result;
use crate::trade_data::TradeMatrix;

/// Computes the requested metrics for one matrix, sharing the binary matrix
/// and paired solves between them. Output order follows `names`.
pub fn compute_metrics(matrix: &TradeMatrix, names: &[MetricName], cfg: &SolverConfig) -> Result<Vec<MetricVector>> {
    let needs_binary = names
        .iter()
        .any(|n| !matches!(n, MetricName::EciPlus | MetricName::PciPlus));
    let binary = if needs_binary {
        Some(binarize(&rca(matrix)?))
    } else {
        None
    };
    let mut eci_pair = None;
    let mut fitness_pair = None;

    let mut out = Vec::with_capacity(names.len());
    for &name in names {
        let v = match name {
            MetricName::Diversity => diversity(binary.as_ref().expect("binary")),
            MetricName::Ubiquity => ubiquity(binary.as_ref().expect("binary")),
            MetricName::Eci | MetricName::Pci => {
                if eci_pair.is_none() {
                    eci_pair = Some(eci_pci(binary.as_ref().expect("binary"))?);
                }
                let (e, p) = eci_pair.as_ref().expect("computed");
                if name == MetricName::Eci {
                    e.clone()
                } else {
                    p.clone()
                }
            }
            MetricName::Fitness | MetricName::Q => {
                if fitness_pair.is_none() {
                    fitness_pair = Some(fitness(binary.as_ref().expect("binary"), cfg)?);
                }
                let (f, q) = fitness_pair.as_ref().expect("computed");
                if name == MetricName::Fitness {
                    f.clone()
                } else {
                    q.clone()
                }
            }
            MetricName::EciPlus => eci_plus(matrix, cfg)?,
            MetricName::PciPlus => pci_plus(matrix, cfg)?,
        };
        out.push(v);
    }
    Ok(out)
}
