//! ECI+ and PCI+: log total exports (or world trade) corrected by how hard
//! each product (or country) is, via geometric-mean-normalized fixed points.
//!
//! Country map: `x_c <- sum_p X_cp / (sum_c' X_c'p / x_c')`, starting from
//! row totals. `ECI+_c = ln x_c - ln(sum_p X_cp / X_p)`.
//!
//! Product map: `y_p <- sum_c X_cp / (sum_p' X_cp' / y_p')`, starting from
//! `sum_c X_cp / X_c`. `PCI+_p = ln X_p - ln y_p`.

use rust_decimal::prelude::ToPrimitive;

use super::metric::{IterationDiagnostics, MetricName, MetricVector, SolverConfig};
use crate::error::{Error, Result};
use crate::trade_data::TradeMatrix;

pub fn eci_plus(matrix: &TradeMatrix, cfg: &SolverConfig) -> Result<MetricVector> {
    eci_plus_observed(matrix, cfg, |_, _| {})
}

pub fn pci_plus(matrix: &TradeMatrix, cfg: &SolverConfig) -> Result<MetricVector> {
    pci_plus_observed(matrix, cfg, |_, _| {})
}

/// As [`eci_plus`], calling `observer(N, x)` after every normalization
/// (`N = 0` is the initial condition).
pub fn eci_plus_observed(
    matrix: &TradeMatrix,
    cfg: &SolverConfig,
    observer: impl FnMut(usize, &[f64]),
) -> Result<MetricVector> {
    cfg.validate()?;
    let s = Sparse::new(matrix)?;
    let (x, diag) = iterate(&s.by_row, s.n_cols, s.row_totals.clone(), cfg, observer);
    let values = (0..s.by_row.len())
        .map(|c| {
            let share: f64 = s.by_row[c].iter().map(|&(p, v)| v / s.col_totals[p]).sum();
            x[c].ln() - share.ln()
        })
        .collect();
    Ok(MetricVector::new(
        MetricName::EciPlus,
        matrix.countries().to_vec(),
        values,
        diag,
    ))
}

/// As [`pci_plus`], calling `observer(N, y)` after every normalization.
pub fn pci_plus_observed(
    matrix: &TradeMatrix,
    cfg: &SolverConfig,
    observer: impl FnMut(usize, &[f64]),
) -> Result<MetricVector> {
    cfg.validate()?;
    let s = Sparse::new(matrix)?;
    let y0: Vec<f64> = s
        .by_col
        .iter()
        .map(|col| col.iter().map(|&(c, v)| v / s.row_totals[c]).sum())
        .collect();
    let (y, diag) = iterate(&s.by_col, s.by_row.len(), y0, cfg, observer);
    let values = (0..s.n_cols).map(|p| s.col_totals[p].ln() - y[p].ln()).collect();
    Ok(MetricVector::new(
        MetricName::PciPlus,
        matrix.products().to_vec(),
        values,
        diag,
    ))
}

/// Runs `x_i <- sum_j A_ij / (sum_i' A_i'j / x_i')` with geometric-mean
/// normalization, where `lines[i]` lists the nonzero `(j, A_ij)`.
fn iterate(
    lines: &[Vec<(usize, f64)>],
    n_other: usize,
    mut x: Vec<f64>,
    cfg: &SolverConfig,
    mut observer: impl FnMut(usize, &[f64]),
) -> (Vec<f64>, IterationDiagnostics) {
    normalize_geometric(&mut x);
    observer(0, &x);
    let mut diag = IterationDiagnostics {
        tolerance: cfg.tol,
        ..Default::default()
    };
    let mut denom = vec![0.0; n_other];
    for n in 1..=cfg.max_iter {
        denom.iter_mut().for_each(|d| *d = 0.0);
        for (i, line) in lines.iter().enumerate() {
            for &(j, a) in line {
                denom[j] += a / x[i];
            }
        }
        let mut next: Vec<f64> = lines
            .iter()
            .map(|line| line.iter().map(|&(j, a)| a / denom[j]).sum())
            .collect();
        normalize_geometric(&mut next);
        let residual = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a.ln() - b.ln()).abs())
            .fold(0.0, f64::max);
        observer(n, &next);
        x = next;
        diag.iterations = n;
        diag.final_residual = residual;
        if residual <= cfg.tol {
            diag.converged = true;
            break;
        }
    }
    (x, diag)
}

fn normalize_geometric(x: &mut [f64]) {
    let log_mean = x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64;
    let g = log_mean.exp();
    x.iter_mut().for_each(|v| *v /= g);
}

struct Sparse {
    by_row: Vec<Vec<(usize, f64)>>,
    by_col: Vec<Vec<(usize, f64)>>,
    n_cols: usize,
    row_totals: Vec<f64>,
    col_totals: Vec<f64>,
}

impl Sparse {
    fn new(m: &TradeMatrix) -> Result<Self> {
        if let Some(&c) = m.empty_rows().first() {
            return Err(Error::domain(format!("country `{}` has no exports", m.countries()[c])));
        }
        if let Some(&p) = m.empty_columns().first() {
            return Err(Error::domain(format!("product `{}` has no exports", m.products()[p])));
        }
        let by_row = m.rows_f64();
        let mut by_col = vec![Vec::new(); m.n_products()];
        for (c, row) in by_row.iter().enumerate() {
            for &(p, v) in row {
                by_col[p].push((c, v));
            }
        }
        let to_f = |d: rust_decimal::Decimal| d.to_f64().unwrap_or(f64::NAN);
        Ok(Sparse {
            by_row,
            by_col,
            n_cols: m.n_products(),
            row_totals: m.row_totals().into_iter().map(to_f).collect(),
            col_totals: m.column_totals().into_iter().map(to_f).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(rows: &[Vec<f64>]) -> TradeMatrix {
        let c: Vec<String> = (0..rows.len()).map(|i| format!("c{i}")).collect();
        let p: Vec<String> = (0..rows[0].len()).map(|i| format!("p{i}")).collect();
        let cr: Vec<&str> = c.iter().map(String::as_str).collect();
        let pr: Vec<&str> = p.iter().map(String::as_str).collect();
        TradeMatrix::from_dense(2010, &cr, &pr, rows).unwrap()
    }

    #[test]
    fn uniform_matrix() {
        let x = 4.0;
        let m = tm(&vec![vec![x; 5]; 3]);
        let e = eci_plus(&m, &SolverConfig::default()).unwrap();
        for v in &e.values {
            assert!((v - (3.0f64 / 5.0).ln()).abs() < 1e-12);
        }
        let p = pci_plus(&m, &SolverConfig::default()).unwrap();
        for v in &p.values {
            assert!((v - (3.0 * x).ln()).abs() < 1e-12);
        }
        let square = eci_plus(&tm(&vec![vec![1.0; 2]; 2]), &SolverConfig::default()).unwrap();
        assert!(square.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn geometric_mean_is_one_every_step() {
        let m = tm(&[vec![1.0, 5.0, 2.0], vec![3.0, 0.0, 7.0], vec![2.0, 2.0, 9.0]]);
        let check = |_: usize, x: &[f64]| {
            let s: f64 = x.iter().map(|v| v.ln()).sum();
            assert!(s.abs() < 1e-10);
        };
        let e = eci_plus_observed(&m, &SolverConfig::default(), check).unwrap();
        assert!(e.diagnostics.converged);
        pci_plus_observed(&m, &SolverConfig::default(), check).unwrap();
    }

    #[test]
    fn zero_row_is_domain_error() {
        let m = tm(&[vec![1.0, 2.0], vec![0.0, 0.0]]);
        assert!(matches!(eci_plus(&m, &SolverConfig::default()), Err(Error::Domain(_))));
    }
}
