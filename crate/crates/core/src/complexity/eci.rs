//! ECI and PCI from the second eigenvector of the country-country matrix.
//!
//! `M~ = D_c^-1 M D_p^-1 M^T` is similar to the symmetric
//! `S = D_c^-1/2 M D_p^-1 M^T D_c^-1/2`, whose leading eigenvector is
//! `sqrt(k_c)` with eigenvalue 1. We deflate that pair, take the top
//! eigenvector of what remains, and map it back with `D_c^-1/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::metric::{mean_sd, pearson, IterationDiagnostics, MetricName, MetricVector};
use super::rca::BinaryMatrix;
use crate::error::{Error, Result};

/// Below this the second eigenvalue is treated as zero.
const SPECTRUM_EPS: f64 = 1e-12;
/// Eigenvalue gaps below this are reported as near-degenerate.
const GAP_EPS: f64 = 1e-9;

pub fn eci_pci(m: &BinaryMatrix) -> Result<(MetricVector, MetricVector)> {
    let (m, dropped) = m.without_empty();
    let n_c = m.n_countries();
    if n_c < 2 {
        return Err(Error::domain(format!(
            "ECI needs at least 2 countries with exports, got {n_c}"
        )));
    }
    let mut diag = IterationDiagnostics::direct();
    diag.tolerance = 1e-9;
    diag.dropped = dropped;
    if components(&m) > 1 {
        diag.flags.push("reducible".into());
    }

    let kc: Vec<f64> = m.values.row_iter().map(|r| r.sum()).collect();
    let kp: Vec<f64> = m.values.column_iter().map(|c| c.sum()).collect();

    // W = M D_p^-1 M^T
    let mut scaled = m.values.clone();
    for (p, mut col) in scaled.column_iter_mut().enumerate() {
        col /= kp[p];
    }
    let w = &scaled * m.values.transpose();

    let sqrt_k: Vec<f64> = kc.iter().map(|k| k.sqrt()).collect();
    let norm = kc.iter().sum::<f64>().sqrt();
    let u1 = DVector::from_iterator(n_c, sqrt_k.iter().map(|s| s / norm));
    let mut s = DMatrix::from_fn(n_c, n_c, |i, j| w[(i, j)] / (sqrt_k[i] * sqrt_k[j]));
    s -= &u1 * u1.transpose();
    // symmetrize away rounding so the solver sees an exactly symmetric input
    let s = (&s + s.transpose()) * 0.5;

    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n_c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda2 = eig.eigenvalues[order[0]];
    diag.eigenvalue = Some(lambda2);

    let country_labels = m.countries.clone();
    let product_labels = m.products.clone();
    if lambda2 <= SPECTRUM_EPS {
        diag.flags.push("degenerate_spectrum".into());
        let eci = MetricVector::new(MetricName::Eci, country_labels, vec![0.0; n_c], diag.clone());
        let pci = MetricVector::new(MetricName::Pci, product_labels, vec![0.0; m.n_products()], diag);
        return Ok((eci, pci));
    }
    if n_c > 2 && lambda2 - eig.eigenvalues[order[1]] < GAP_EPS {
        diag.flags.push("near_degenerate_spectrum".into());
    }

    let u = eig.eigenvectors.column(order[0]);
    let v: Vec<f64> = (0..n_c).map(|c| u[c] / sqrt_k[c]).collect();
    let (mu, sd) = mean_sd(&v);
    let mut eci: Vec<f64> = v.iter().map(|x| (x - mu) / sd).collect();

    let corr = pearson(&eci, &kc);
    let flip = if corr.abs() <= 1e-12 {
        // the smallest label with a clearly nonzero score takes the positive side
        (0..n_c)
            .filter(|&c| eci[c].abs() > 1e-9)
            .min_by(|&a, &b| country_labels[a].cmp(&country_labels[b]))
            .is_some_and(|c| eci[c] < 0.0)
    } else {
        corr < 0.0
    };
    if flip {
        eci.iter_mut().for_each(|x| *x = -*x);
    }

    // residual of M~ w = lambda w for the eigenvector scaled to unit SD
    let wv = DVector::from_iterator(n_c, v.iter().map(|x| x / sd));
    let mw = &w * &wv;
    diag.final_residual = (0..n_c)
        .map(|c| (mw[c] / kc[c] - lambda2 * wv[c]).abs())
        .fold(0.0, f64::max);

    let pci_raw: Vec<f64> = (0..m.n_products())
        .map(|p| (0..n_c).map(|c| m.values[(c, p)] * eci[c]).sum::<f64>() / kp[p])
        .collect();
    let (pm, psd) = mean_sd(&pci_raw);
    let pci = if psd > 0.0 {
        pci_raw.iter().map(|x| (x - pm) / psd).collect()
    } else {
        vec![0.0; pci_raw.len()]
    };

    Ok((
        MetricVector::new(MetricName::Eci, country_labels, eci, diag.clone()),
        MetricVector::new(MetricName::Pci, product_labels, pci, diag),
    ))
}

/// Connected components of the bipartite country-product graph, counted
/// over countries.
fn components(m: &BinaryMatrix) -> usize {
    let n = m.n_countries();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for list in m.product_lists() {
        if let Some((&first, rest)) = list.split_first() {
            for &c in rest {
                let (a, b) = (find(&mut parent, first), find(&mut parent, c));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&c| find(&mut parent, c) == c).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm(rows: &[Vec<u8>]) -> BinaryMatrix {
        let c: Vec<String> = (0..rows.len()).map(|i| format!("c{i}")).collect();
        let p: Vec<String> = (0..rows[0].len()).map(|i| format!("p{i}")).collect();
        let cr: Vec<&str> = c.iter().map(String::as_str).collect();
        let pr: Vec<&str> = p.iter().map(String::as_str).collect();
        BinaryMatrix::from_rows(&cr, &pr, rows).unwrap()
    }

    #[test]
    fn two_by_two_golden() {
        let (eci, pci) = eci_pci(&bm(&[vec![1, 1], vec![0, 1]])).unwrap();
        assert!((eci.values[0] - 1.0).abs() < 1e-12);
        assert!((eci.values[1] + 1.0).abs() < 1e-12);
        assert!((eci.diagnostics.eigenvalue.unwrap() - 0.25).abs() < 1e-12);
        assert!(eci.diagnostics.final_residual < 1e-12);
        // product 0 is exported only by the complex country
        assert!(pci.values[0] > pci.values[1]);
    }

    #[test]
    fn all_ones_is_degenerate() {
        let (eci, pci) = eci_pci(&bm(&vec![vec![1; 4]; 3])).unwrap();
        assert!(eci.diagnostics.has_flag("degenerate_spectrum"));
        assert!(eci.values.iter().chain(&pci.values).all(|&v| v == 0.0));
    }

    #[test]
    fn identical_blocks_give_equal_scores_within_block() {
        let rows = vec![vec![1, 1, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 1, 1], vec![0, 0, 1, 1]];
        let (eci, _) = eci_pci(&bm(&rows)).unwrap();
        assert!(eci.diagnostics.has_flag("reducible"));
        assert!((eci.values[0] - eci.values[1]).abs() < 1e-12);
        assert!((eci.values[2] - eci.values[3]).abs() < 1e-12);
        // diversity is flat, so the smallest label takes the nonnegative side
        assert!((eci.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_country_is_domain_error() {
        assert!(matches!(eci_pci(&bm(&[vec![1, 1]])), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_rows_are_dropped_and_recorded() {
        let (eci, _) = eci_pci(&bm(&[vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 0]])).unwrap();
        assert_eq!(eci.labels, ["c0", "c1"]);
        assert_eq!(eci.diagnostics.dropped, ["country:c2", "product:p2"]);
    }
}
