//! Cross-metric comparison on shared labels.

use serde::{Deserialize, Serialize};

use super::metric::{mean_sd, pearson, MetricName, MetricVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub label: String,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub a: MetricName,
    pub b: MetricName,
    pub n: usize,
    pub pearson: f64,
    pub r2: f64,
    /// Spearman rank correlation with average ranks for ties.
    pub spearman: f64,
    /// Shared labels in lexicographic order.
    pub scatter: Vec<ScatterPoint>,
}

pub fn correlate(a: &MetricVector, b: &MetricVector) -> Result<CorrelationReport> {
    if a.axis != b.axis {
        return Err(Error::domain(format!(
            "cannot correlate {} with {}: different axes",
            a.name, b.name
        )));
    }
    let mut scatter: Vec<ScatterPoint> = a
        .iter()
        .filter_map(|(l, x)| {
            b.get(l).map(|y| ScatterPoint {
                label: l.to_string(),
                a: x,
                b: y,
            })
        })
        .collect();
    scatter.sort_by(|p, q| p.label.cmp(&q.label));
    if scatter.len() < 3 {
        return Err(Error::domain(format!(
            "{} and {} share {} labels, need at least 3",
            a.name,
            b.name,
            scatter.len()
        )));
    }
    let xa: Vec<f64> = scatter.iter().map(|s| s.a).collect();
    let xb: Vec<f64> = scatter.iter().map(|s| s.b).collect();
    if mean_sd(&xa).1 == 0.0 || mean_sd(&xb).1 == 0.0 {
        return Err(Error::domain(format!(
            "{} or {} is constant on the shared labels",
            a.name, b.name
        )));
    }
    let r = pearson(&xa, &xb);
    Ok(CorrelationReport {
        a: a.name,
        b: b.name,
        n: scatter.len(),
        pearson: r,
        r2: r * r,
        spearman: pearson(&ranks(&xa), &ranks(&xb)),
        scatter,
    })
}

/// 1-based ranks, ties share their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::IterationDiagnostics;

    fn mv(name: MetricName, labels: &[&str], values: &[f64]) -> MetricVector {
        MetricVector::new(
            name,
            labels.iter().map(|s| s.to_string()).collect(),
            values.to_vec(),
            IterationDiagnostics::direct(),
        )
    }

    #[test]
    fn self_and_negated() {
        let a = mv(MetricName::Eci, &["a", "b", "c", "d"], &[1.0, 3.0, 2.0, 5.0]);
        let r = correlate(&a, &a).unwrap();
        assert!((r.r2 - 1.0).abs() < 1e-12);
        let neg = mv(MetricName::EciPlus, &["a", "b", "c", "d"], &[-1.0, -3.0, -2.0, -5.0]);
        let r = correlate(&a, &neg).unwrap();
        assert!((r.pearson + 1.0).abs() < 1e-12);
        assert!((r.spearman + 1.0).abs() < 1e-12);
    }

    #[test]
    fn uses_label_intersection() {
        let a = mv(MetricName::Eci, &["a", "b", "c", "x"], &[1.0, 2.0, 3.0, 100.0]);
        let b = mv(MetricName::Fitness, &["c", "b", "a", "y"], &[3.0, 2.0, 1.0, -7.0]);
        let r = correlate(&a, &b).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.scatter[0].label, "a");
        assert!((r.pearson - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_shared_labels() {
        let a = mv(MetricName::Eci, &["a", "b"], &[1.0, 2.0]);
        assert!(correlate(&a, &a).is_err());
    }

    #[test]
    fn tied_ranks_average() {
        assert_eq!(ranks(&[2.0, 1.0, 2.0, 3.0]), [2.5, 1.0, 2.5, 4.0]);
    }
}
