//! Within (fixed-effects) estimator with year dummies and country-clustered
//! standard errors.
//!
//! Variables are demeaned as `z - mean_i(z) + mean(z)` so the constant keeps
//! its usual meaning (the average country effect).

use std::collections::BTreeMap;

use nalgebra::DVector;

use super::ols::{
    centered_r2, cluster_robust_covariance, design, dummy_means, least_squares, to_rows, Estimator, Formula,
    RegressionResult, Residual,
};
use super::panel::PanelObservation;
use crate::error::{Error, Result};

/// Regressors whose within-country spread is below this (relative to their
/// scale) count as absorbed by the country effects.
const ABSORBED_TOL: f64 = 1e-10;

pub fn fixed_effects(panel: &[PanelObservation], formula: &Formula) -> Result<RegressionResult> {
    let d = design(panel, formula)?;
    let (n, k) = d.x.shape();
    let g = d.cluster_labels.len();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (i, &c) in d.clusters.iter().enumerate() {
        members[c].push(i);
    }
    let short: Vec<&str> = (0..g)
        .filter(|&c| members[c].len() < 2)
        .map(|c| d.cluster_labels[c].as_str())
        .collect();
    if !short.is_empty() {
        return Err(Error::domain(format!(
            "fixed effects need at least 2 periods per country; single-period: {}",
            short.join(", ")
        )));
    }

    let group_means = |v: &[f64]| -> Vec<f64> {
        members
            .iter()
            .map(|m| m.iter().map(|&i| v[i]).sum::<f64>() / m.len() as f64)
            .collect()
    };
    let demean = |v: &[f64]| -> (Vec<f64>, Vec<f64>, f64) {
        let gm = group_means(v);
        let overall = v.iter().sum::<f64>() / v.len() as f64;
        let out = (0..v.len()).map(|i| v[i] - gm[d.clusters[i]] + overall).collect();
        (out, gm, overall)
    };

    let mut xw = d.x.clone();
    let mut xbar = vec![vec![0.0; k]; g];
    let mut absorbed = Vec::new();
    for j in 0..k - 1 {
        let col: Vec<f64> = d.x.column(j).iter().copied().collect();
        let (w, gm, _) = demean(&col);
        let scale = col.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let spread = (0..n).map(|i| (col[i] - gm[d.clusters[i]]).abs()).fold(0.0, f64::max);
        if spread <= ABSORBED_TOL * scale {
            absorbed.push(d.names[j].clone());
        }
        for c in 0..g {
            xbar[c][j] = gm[c];
        }
        for i in 0..n {
            xw[(i, j)] = w[i];
        }
    }
    if !absorbed.is_empty() {
        return Err(Error::AbsorbedByFixedEffects(absorbed));
    }
    let y: Vec<f64> = d.y.iter().copied().collect();
    let (yw, ybar, _) = demean(&y);
    let yw = DVector::from_vec(yw);

    let fit = least_squares(&xw, &yw, &d.names)?;
    let cov = cluster_robust_covariance(&xw, &fit.residuals, &d.clusters, &fit.xtx_inv, k)?;
    let slopes = fit.beta.rows(0, k - 1).into_owned();

    let effects: Vec<f64> = (0..g)
        .map(|c| ybar[c] - (0..k - 1).map(|j| xbar[c][j] * slopes[j]).sum::<f64>())
        .collect();
    let xb: Vec<f64> = (0..n)
        .map(|i| (0..k - 1).map(|j| d.x[(i, j)] * slopes[j]).sum())
        .collect();
    let residuals: Vec<Residual> = panel
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let fitted = effects[d.clusters[i]] + xb[i];
            Residual {
                country: o.country.clone(),
                period_start: o.period_start,
                fitted,
                residual: y[i] - fitted,
            }
        })
        .collect();

    let ssr = fit.residuals.norm_squared();
    let r2_within = centered_r2(&yw, ssr);
    let xbar_b: Vec<f64> = (0..g)
        .map(|c| (0..k - 1).map(|j| xbar[c][j] * slopes[j]).sum())
        .collect();
    let r2_between = corr2(&xbar_b, &ybar);
    let r2_overall = corr2(&xb, &y);
    let dof = n as i64 - g as i64 - (k as i64 - 1);
    if dof <= 0 {
        return Err(Error::domain(format!(
            "fixed effects: {n} observations cannot identify {g} country effects and {} slopes",
            k - 1
        )));
    }

    Ok(RegressionResult {
        estimator: Estimator::FixedEffects,
        formula: formula.name.clone(),
        metric: None,
        horizon: panel.first().map(|o| o.horizon),
        names: d.names.clone(),
        coefficients: fit.beta.iter().copied().collect(),
        se: cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect(),
        covariance: to_rows(&cov),
        n_obs: n,
        n_clusters: g,
        r2: r2_within,
        r2_adjusted: 1.0 - (1.0 - r2_within) * (n as f64 - 1.0) / (n - k) as f64,
        r2_within: Some(r2_within),
        r2_between: Some(r2_between),
        r2_overall: Some(r2_overall),
        rmse: (ssr / dof as f64).sqrt(),
        dummy_means: dummy_means(&d),
        periods: d.periods.clone(),
        year_dummies: d.year_dummies.clone(),
        country_effects: Some(
            d.cluster_labels
                .iter()
                .cloned()
                .zip(effects)
                .collect::<BTreeMap<_, _>>(),
        ),
        residuals,
    })
}

fn corr2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab * sab / (saa * sbb)
}
