//! Regression formulas, design matrices, pooled OLS, and cluster-robust
//! covariance.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::panel::{is_control, PanelObservation, CONTROLS};
use crate::complexity::MetricName;
use crate::error::{Error, Result};

/// Which terms enter the growth regression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Formula {
    pub name: String,
    pub metric: bool,
    /// Initial log GDP per capita times the metric.
    pub interaction: bool,
    pub initial_gdp: bool,
    pub controls: Vec<String>,
    pub year_dummies: bool,
}

impl Default for Formula {
    fn default() -> Self {
        Formula {
            name: "base".into(),
            metric: true,
            interaction: true,
            initial_gdp: true,
            controls: CONTROLS.iter().map(|s| s.to_string()).collect(),
            year_dummies: true,
        }
    }
}

impl Formula {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::InvalidConfig(format!(
                "formula name `{}` must be nonempty and use only [A-Za-z0-9_-]",
                self.name
            )));
        }
        if let Some(c) = self.controls.iter().find(|c| !is_control(c)) {
            return Err(Error::InvalidConfig(format!(
                "unknown control `{c}` in formula `{}`",
                self.name
            )));
        }
        if self.regressors().is_empty() {
            return Err(Error::InvalidConfig(format!(
                "formula `{}` has no regressors",
                self.name
            )));
        }
        Ok(())
    }

    /// Regressor names, excluding year dummies and the constant.
    pub fn regressors(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.metric {
            out.push("initial_metric".to_string());
        }
        if self.interaction {
            out.push("gdp_x_metric".to_string());
        }
        if self.initial_gdp {
            out.push("initial_log_gdp_pc".to_string());
        }
        out.extend(self.controls.iter().cloned());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    PooledOls,
    FixedEffects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub country: String,
    pub period_start: i32,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub estimator: Estimator,
    pub formula: String,
    pub metric: Option<MetricName>,
    pub horizon: Option<u32>,
    /// Regressors, then `year_YYYY` dummies, then `const`.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Cluster-robust (by country) standard errors.
    pub se: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Centered R² (within R² for fixed effects).
    pub r2: f64,
    pub r2_adjusted: f64,
    pub r2_within: Option<f64>,
    pub r2_between: Option<f64>,
    pub r2_overall: Option<f64>,
    pub rmse: f64,
    /// All period starts in the estimation sample; the first is the reference.
    pub periods: Vec<i32>,
    pub year_dummies: Vec<i32>,
    /// Sample share of each year dummy.
    pub dummy_means: Vec<f64>,
    /// Estimated country intercepts (fixed effects only).
    pub country_effects: Option<BTreeMap<String, f64>>,
    pub residuals: Vec<Residual>,
}

impl RegressionResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.se[i])
    }

    /// Two-sided p-value against the standard normal.
    pub fn p_value(&self, i: usize) -> f64 {
        if self.se[i] == 0.0 {
            return if self.coefficients[i] == 0.0 { 1.0 } else { 0.0 };
        }
        let z = (self.coefficients[i] / self.se[i]).abs();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        2.0 * (1.0 - normal.cdf(z))
    }

    /// `*` p < 0.10, `**` p < 0.05, `***` p < 0.01.
    pub fn stars(&self, i: usize) -> &'static str {
        let p = self.p_value(i);
        if p < 0.01 {
            "***"
        } else if p < 0.05 {
            "**"
        } else if p < 0.10 {
            "*"
        } else {
            ""
        }
    }
}

/// Stacked regression inputs. Columns are `names`, clusters index
/// `cluster_labels`.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub names: Vec<String>,
    pub clusters: Vec<usize>,
    pub cluster_labels: Vec<String>,
    pub periods: Vec<i32>,
    pub year_dummies: Vec<i32>,
}

pub fn design(panel: &[PanelObservation], formula: &Formula) -> Result<Design> {
    formula.validate()?;
    if panel.is_empty() {
        return Err(Error::EmptyPanel("no observations to regress".into()));
    }
    let regressors = formula.regressors();
    let mut periods: Vec<i32> = panel.iter().map(|o| o.period_start).collect();
    periods.sort_unstable();
    periods.dedup();
    let year_dummies: Vec<i32> = if formula.year_dummies {
        periods.iter().skip(1).copied().collect()
    } else {
        Vec::new()
    };
    let mut names = regressors.clone();
    names.extend(year_dummies.iter().map(|y| format!("year_{y}")));
    names.push("const".into());

    let cluster_labels: Vec<String> = {
        let mut c: Vec<String> = panel.iter().map(|o| o.country.clone()).collect();
        c.sort();
        c.dedup();
        c
    };
    let n = panel.len();
    let k = names.len();
    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    let mut clusters = Vec::with_capacity(n);
    for (i, o) in panel.iter().enumerate() {
        y[i] = o.growth.ok_or_else(|| {
            Error::domain(format!(
                "observation {} {} has no growth value",
                o.country, o.period_start
            ))
        })?;
        for (j, r) in regressors.iter().enumerate() {
            x[(i, j)] = o.feature(r).ok_or_else(|| Error::MissingFeature {
                country: o.country.clone(),
                feature: r.clone(),
            })?;
        }
        for (d, yr) in year_dummies.iter().enumerate() {
            x[(i, regressors.len() + d)] = f64::from(u8::from(o.period_start == *yr));
        }
        x[(i, k - 1)] = 1.0;
        clusters.push(cluster_labels.binary_search(&o.country).expect("label present"));
    }
    Ok(Design {
        x,
        y,
        names,
        clusters,
        cluster_labels,
        periods,
        year_dummies,
    })
}

pub(crate) struct Fit {
    pub beta: DVector<f64>,
    pub xtx_inv: DMatrix<f64>,
    pub residuals: DVector<f64>,
}

/// Relative size of a QR pivot below which a column counts as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

/// Least squares via Householder QR, failing on rank deficiency with the
/// names of the offending columns.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<Fit> {
    let (n, k) = x.shape();
    if n <= k {
        return Err(Error::domain(format!(
            "{n} observations for {k} parameters; need more observations"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let deficient: Vec<usize> = (0..k)
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= COLLINEAR_TOL * norm
        })
        .collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient(collinear_names(x, names, &deficient)));
    }
    let qt_y = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qt_y)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let residuals = y - x * &beta;
    Ok(Fit {
        beta,
        xtx_inv,
        residuals,
    })
}

/// Names each deficient column together with the earlier columns it is a
/// combination of.
fn collinear_names(x: &DMatrix<f64>, names: &[String], deficient: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |s: &String| {
        if !out.contains(s) {
            out.push(s.clone());
        }
    };
    for &j in deficient {
        let basis: Vec<usize> = (0..j).filter(|c| !deficient.contains(c)).collect();
        if !basis.is_empty() && x.column(j).norm() > 0.0 {
            let b = DMatrix::from_fn(x.nrows(), basis.len(), |i, c| x[(i, basis[c])]);
            let target = x.column(j).into_owned();
            let qr = b.clone().qr();
            let coef = qr
                .r()
                .solve_upper_triangular(&(qr.q().transpose() * &target))
                .unwrap_or_else(|| DVector::zeros(basis.len()));
            let scale = target.norm();
            for (c, &col) in basis.iter().enumerate() {
                if (coef[c] * b.column(c).norm()).abs() > 1e-8 * scale {
                    push(&names[col]);
                }
            }
        }
        push(&names[j]);
    }
    out
}

/// Cluster-robust sandwich `(X'X)^-1 (sum_g X_g' u_g u_g' X_g) (X'X)^-1`
/// scaled by `G/(G-1) * (N-1)/(N-K)`, where `k` is the parameter count used
/// for the correction.
pub fn cluster_robust_covariance(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    clusters: &[usize],
    xtx_inv: &DMatrix<f64>,
    k: usize,
) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    let g = clusters.iter().copied().max().map_or(0, |m| m + 1);
    let n_groups = {
        let mut seen = vec![false; g];
        clusters.iter().for_each(|&c| seen[c] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if n_groups < 2 {
        return Err(Error::domain("cluster-robust covariance needs at least 2 clusters"));
    }
    if n <= k {
        return Err(Error::domain(
            "cluster-robust covariance needs more observations than parameters",
        ));
    }
    let mut scores = DMatrix::zeros(g, p);
    for i in 0..n {
        let mut row = scores.row_mut(clusters[i]);
        row += x.row(i) * residuals[i];
    }
    let meat = scores.transpose() * &scores;
    let factor = n_groups as f64 / (n_groups as f64 - 1.0) * (n as f64 - 1.0) / (n - k) as f64;
    let v = xtx_inv * meat * xtx_inv * factor;
    Ok((&v + v.transpose()) * 0.5)
}

pub(crate) fn centered_r2(y: &DVector<f64>, ssr: f64) -> f64 {
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst > 0.0 {
        1.0 - ssr / sst
    } else if ssr == 0.0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn dummy_means(d: &Design) -> Vec<f64> {
    let n = d.x.nrows() as f64;
    let offset = d.names.len() - 1 - d.year_dummies.len();
    (0..d.year_dummies.len())
        .map(|j| d.x.column(offset + j).sum() / n)
        .collect()
}

/// Pooled OLS with year dummies and country-clustered standard errors.
pub fn pooled_ols(panel: &[PanelObservation], formula: &Formula) -> Result<RegressionResult> {
    let d = design(panel, formula)?;
    let (n, k) = d.x.shape();
    let fit = least_squares(&d.x, &d.y, &d.names)?;
    let cov = cluster_robust_covariance(&d.x, &fit.residuals, &d.clusters, &fit.xtx_inv, k)?;
    let ssr = fit.residuals.norm_squared();
    let r2 = centered_r2(&d.y, ssr);
    let residuals = panel
        .iter()
        .enumerate()
        .map(|(i, o)| Residual {
            country: o.country.clone(),
            period_start: o.period_start,
            fitted: d.y[i] - fit.residuals[i],
            residual: fit.residuals[i],
        })
        .collect();
    Ok(RegressionResult {
        estimator: Estimator::PooledOls,
        formula: formula.name.clone(),
        metric: None,
        horizon: panel.first().map(|o| o.horizon),
        names: d.names.clone(),
        coefficients: fit.beta.iter().copied().collect(),
        se: cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect(),
        covariance: to_rows(&cov),
        n_obs: n,
        n_clusters: d.cluster_labels.len(),
        r2,
        r2_adjusted: 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64,
        r2_within: None,
        r2_between: None,
        r2_overall: None,
        rmse: (ssr / (n - k) as f64).sqrt(),
        dummy_means: dummy_means(&d),
        periods: d.periods,
        year_dummies: d.year_dummies,
        country_effects: None,
        residuals,
    })
}
