mod common;

use std::collections::BTreeMap;

use common::oracles;
use ecomplex::complexity::{MetricName, MetricVector};
use ecomplex::econometrics::{
    build_panel, cluster_robust_covariance, country_metric, design, fixed_effects, pooled_ols, predict_batch,
    predict_growth, render_table, Formula, PanelObservation, PanelSpec, PeriodConvention,
};
use ecomplex::trade_data::{CountryMeta, Governance, MetaTable};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

fn obs(country: &str, t: i32, y: f64, metric: f64, gdp: f64, hc: f64) -> PanelObservation {
    PanelObservation {
        country: country.into(),
        period_start: t,
        horizon: 5,
        growth: Some(y),
        initial_log_gdp_pc: gdp,
        initial_metric: metric,
        interaction: metric * gdp,
        initial_human_capital: Some(hc),
        initial_population: None,
        initial_capital_per_worker: None,
        governance: Governance::default(),
    }
}

fn formula(year_dummies: bool) -> Formula {
    Formula {
        name: "t".into(),
        controls: vec!["human_capital".into()],
        year_dummies,
        ..Default::default()
    }
}

/// Noisy panel: `n_c` countries x `n_t` periods.
fn random_panel(seed: u64, n_c: usize, n_t: usize) -> Vec<PanelObservation> {
    let mut r = common::rng(seed);
    let mut out = Vec::new();
    for c in 0..n_c {
        let effect: f64 = r.random_range(-0.05..0.05);
        for t in 0..n_t {
            let m: f64 = r.random_range(-2.0..2.0);
            let g: f64 = r.random_range(6.0..11.0);
            let hc: f64 = r.random_range(1.0..3.5);
            let y = effect + 0.02 * m - 0.003 * m * g - 0.01 * g
                + 0.005 * hc
                + 0.004 * t as f64
                + r.random_range(-0.01..0.01);
            out.push(obs(&format!("K{c:02}"), 1990 + 5 * t as i32, y, m, g, hc));
        }
    }
    out
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[test]
fn cluster_covariance_matches_explicit_sandwich() {
    let panel = random_panel(1, 3, 5);
    let f = formula(true);
    let r = pooled_ols(&panel, &f).unwrap();
    let d = design(&panel, &f).unwrap();
    let resid: Vec<f64> = r.residuals.iter().map(|e| e.residual).collect();
    let want = oracles::sandwich(&rows(&d.x), &resid, &d.clusters, d.x.ncols());
    for (a, b) in r.covariance.iter().flatten().zip(want.iter().flatten()) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-6), "{a} vs {b}");
    }
    assert_eq!(r.n_clusters, 3);
}

#[test]
fn single_observation_clusters_reduce_to_white() {
    let panel: Vec<_> = random_panel(2, 12, 1);
    let f = Formula {
        year_dummies: false,
        ..formula(false)
    };
    let r = pooled_ols(&panel, &f).unwrap();
    let d = design(&panel, &f).unwrap();
    let (n, k) = d.x.shape();
    let xtx_inv = (d.x.transpose() * &d.x).try_inverse().unwrap();
    let u = DVector::from_iterator(n, r.residuals.iter().map(|e| e.residual));
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let xi = d.x.row(i).transpose();
        meat += &xi * xi.transpose() * (u[i] * u[i]);
    }
    let hc0 = &xtx_inv * meat * &xtx_inv;
    let factor = n as f64 / (n - k) as f64;
    for (i, row) in r.covariance.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - hc0[(i, j)] * factor).abs() <= 1e-12);
        }
    }
}

#[test]
fn exact_fit_has_zero_standard_errors() {
    let panel: Vec<_> = (0..8)
        .map(|i| {
            let x = i as f64 / 3.0 - 1.0;
            let mut o = obs(&format!("c{i}"), 2000, 0.5 + 2.0 * x, x, 0.0, 0.0);
            o.growth = Some(0.5 + 2.0 * x);
            o
        })
        .collect();
    let f = Formula {
        name: "line".into(),
        interaction: false,
        initial_gdp: false,
        controls: vec![],
        year_dummies: false,
        metric: true,
    };
    let r = pooled_ols(&panel, &f).unwrap();
    assert!((r.coef("initial_metric").unwrap() - 2.0).abs() < 1e-14);
    assert!((r.coef("const").unwrap() - 0.5).abs() < 1e-14);
    assert!(r.se.iter().all(|s| *s < 1e-13));
}

#[test]
fn residuals_are_orthogonal_and_covariance_is_psd() {
    let panel = random_panel(3, 10, 4);
    let f = formula(true);
    let r = pooled_ols(&panel, &f).unwrap();
    let d = design(&panel, &f).unwrap();
    let u = DVector::from_iterator(d.x.nrows(), r.residuals.iter().map(|e| e.residual));
    for j in 0..d.x.ncols() {
        let col = d.x.column(j);
        let dot = col.dot(&u) / (col.norm() * u.norm());
        assert!(dot.abs() <= 1e-8, "{}", d.names[j]);
    }
    let v = DMatrix::from_fn(r.names.len(), r.names.len(), |i, j| r.covariance[i][j]);
    assert_eq!(v, v.transpose());
    let eig = SymmetricEigen::new(v.clone());
    let scale = v.diagonal().max();
    assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12 * scale));
    assert!(r.r2_adjusted < r.r2);
}

#[test]
fn within_estimator_equals_dummy_variable_regression() {
    for (seed, n_c, n_t) in [(4, 4, 3), (5, 9, 5)] {
        let panel = random_panel(seed, n_c, n_t);
        let f = formula(true);
        let fe = fixed_effects(&panel, &f).unwrap();

        // LSDV: regressors, year dummies, one dummy per country (no constant)
        let d = design(&panel, &f).unwrap();
        let k = d.x.ncols() - 1;
        let x: Vec<Vec<f64>> = (0..d.x.nrows())
            .map(|i| {
                let mut row: Vec<f64> = (0..k).map(|j| d.x[(i, j)]).collect();
                row.extend((0..d.cluster_labels.len()).map(|g| f64::from(u8::from(d.clusters[i] == g))));
                row
            })
            .collect();
        let y: Vec<f64> = d.y.iter().copied().collect();
        let (beta, resid) = oracles::ols(&x, &y);
        for j in 0..k {
            assert!(
                (fe.coefficients[j] - beta[j]).abs() <= 1e-10,
                "{}: {} vs {}",
                fe.names[j],
                fe.coefficients[j],
                beta[j]
            );
        }
        for (a, b) in fe.residuals.iter().zip(&resid) {
            assert!((a.residual - b).abs() <= 1e-10);
        }
        let effects = fe.country_effects.as_ref().unwrap();
        for (g, label) in d.cluster_labels.iter().enumerate() {
            assert!((effects[label] - beta[k + g]).abs() <= 1e-10);
        }
        assert!(fe.r2_within.is_some() && fe.r2_between.is_some() && fe.r2_overall.is_some());
    }
}

#[test]
fn fixed_effects_ignore_country_constant_shifts() {
    let panel = random_panel(6, 6, 4);
    let f = formula(true);
    let base = fixed_effects(&panel, &f).unwrap();
    let shifted: Vec<_> = panel
        .iter()
        .map(|o| {
            let mut o = o.clone();
            let bump = o.country.bytes().map(f64::from).sum::<f64>() * 0.01;
            o.initial_human_capital = o.initial_human_capital.map(|h| h + bump);
            o
        })
        .collect();
    let moved = fixed_effects(&shifted, &f).unwrap();
    for name in ["initial_metric", "gdp_x_metric", "initial_log_gdp_pc", "human_capital"] {
        assert!(
            (base.coef(name).unwrap() - moved.coef(name).unwrap()).abs() <= 1e-10,
            "{name}"
        );
    }
}

#[test]
fn year_dummies_absorb_period_shifts_in_growth() {
    let panel = random_panel(7, 8, 4);
    let f = formula(true);
    let base = pooled_ols(&panel, &f).unwrap();
    let shifted: Vec<_> = panel
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.growth = o.growth.map(|g| g + 0.01 * f64::from(o.period_start - 1990).sqrt());
            o
        })
        .collect();
    let moved = pooled_ols(&shifted, &f).unwrap();
    for name in ["initial_metric", "gdp_x_metric", "initial_log_gdp_pc", "human_capital"] {
        assert!(
            (base.coef(name).unwrap() - moved.coef(name).unwrap()).abs() <= 1e-10,
            "{name}"
        );
    }
}

fn meta_series(countries: &[&str], years: std::ops::RangeInclusive<i32>) -> MetaTable {
    let mut t = MetaTable::new();
    for (i, c) in countries.iter().enumerate() {
        for y in years.clone() {
            let mut m = CountryMeta::new(*c, y);
            m.gdp_pc = Some(1000.0 * (1.0 + i as f64) * 1.02f64.powi(y - 1973));
            m.population = Some(2e7);
            m.human_capital = Some(2.0);
            m.capital_per_worker = Some(5e4);
            t.insert(m);
        }
    }
    t
}

#[test]
fn balanced_panel_shape_and_exclusions() {
    let countries = ["AAA", "BBB", "CCC"];
    let meta = meta_series(&countries, 1973..=2013);
    let mut metrics: BTreeMap<i32, MetricVector> = BTreeMap::new();
    for t in (1973..2013).step_by(5) {
        let vals: Vec<(&str, f64)> = countries
            .iter()
            .enumerate()
            .filter(|(_, c)| !(**c == "CCC" && t == 1988))
            .map(|(i, c)| (*c, i as f64 + f64::from(t) * 1e-3))
            .collect();
        metrics.insert(t, country_metric(MetricName::EciPlus, &vals));
    }
    let spec = PanelSpec::default();
    let p = build_panel(&metrics, &meta, &spec).unwrap();
    assert_eq!(p.periods.len(), 8);
    assert_eq!(p.observations.len(), 2 * 8);
    assert_eq!(p.excluded.len(), 1);
    assert_eq!(p.excluded[0].country, "CCC");
    assert!(p.excluded[0].reason.contains("1988"));
    for o in &p.observations {
        assert_eq!(o.interaction, o.initial_log_gdp_pc * o.initial_metric);
        assert!((o.growth.unwrap() - 0.02).abs() < 1e-12);
        assert_eq!(o.initial_population, Some(20.0));
    }

    let cross = PanelSpec {
        horizon: 40,
        ..Default::default()
    };
    let mut m40 = BTreeMap::new();
    m40.insert(1973, metrics[&1973].clone());
    let p = build_panel(&m40, &meta, &cross).unwrap();
    assert_eq!(p.periods, [1973]);
    assert_eq!(p.observations.len(), 3);
}

#[test]
fn predictions_follow_the_linear_model() {
    let panel = random_panel(8, 10, 3);
    let f = formula(true);
    let model = pooled_ols(&panel, &f).unwrap();

    for (o, res) in panel.iter().zip(&model.residuals) {
        let p = predict_growth(&model, o, PeriodConvention::Latest).unwrap();
        assert!((p - (o.growth.unwrap() - res.residual)).abs() < 1e-14);
    }

    let mut zero = obs("ZZZ", 2050, 0.0, 0.0, 0.0, 0.0);
    zero.growth = None;
    let p = predict_growth(&model, &zero, PeriodConvention::Reference).unwrap();
    assert!((p - model.coef("const").unwrap()).abs() < 1e-15);

    let mut base = obs("ZZZ", 2050, 0.0, 0.4, 8.5, 2.0);
    base.growth = None;
    let mut bumped = base.clone();
    let delta = 0.25;
    bumped.set_metric(base.initial_metric + delta);
    let diff = predict_growth(&model, &bumped, PeriodConvention::Latest).unwrap()
        - predict_growth(&model, &base, PeriodConvention::Latest).unwrap();
    let want = (model.coef("initial_metric").unwrap() + model.coef("gdp_x_metric").unwrap() * 8.5) * delta;
    assert!((diff - want).abs() < 1e-14);

    let mean = predict_growth(&model, &base, PeriodConvention::Mean).unwrap();
    let reference = predict_growth(&model, &base, PeriodConvention::Reference).unwrap();
    let dummy_part: f64 = model
        .year_dummies
        .iter()
        .zip(&model.dummy_means)
        .map(|(y, m)| model.coef(&format!("year_{y}")).unwrap() * m)
        .sum();
    assert!((mean - reference - dummy_part).abs() < 1e-14);
}

#[test]
fn batch_ranks_descending_with_label_ties() {
    let panel = random_panel(9, 10, 3);
    let model = pooled_ols(&panel, &formula(true)).unwrap();
    let mut feats = Vec::new();
    for c in ["DDD", "BBB", "CCC"] {
        let mut o = obs(c, 2050, 0.0, 0.3, 9.0, 2.0);
        o.growth = None;
        feats.push(o);
    }
    let mut hi = obs("AAA", 2050, 0.0, 1.5, 9.0, 3.0);
    hi.growth = None;
    feats.push(hi);
    let mut missing = obs("EEE", 2050, 0.0, 0.3, 9.0, 2.0);
    missing.initial_human_capital = None;
    feats.push(missing);

    let (ranked, skipped) = predict_batch(&model, &feats, PeriodConvention::Latest);
    let order: Vec<&str> = ranked.iter().map(|p| p.country.as_str()).collect();
    let ties: Vec<&str> = order.iter().copied().filter(|c| *c != "AAA").collect();
    assert_eq!(ties, ["BBB", "CCC", "DDD"]);
    assert!(ranked
        .windows(2)
        .all(|w| w[0].predicted_growth >= w[1].predicted_growth));
    assert_eq!(ranked.iter().map(|p| p.rank).collect::<Vec<_>>(), [1, 2, 3, 4]);
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0].country, "EEE");
}

#[test]
fn table_omits_missing_rows() {
    let panel = random_panel(10, 10, 3);
    let with = pooled_ols(&panel, &formula(true)).unwrap();
    let without = pooled_ols(
        &panel,
        &Formula {
            interaction: false,
            ..formula(true)
        },
    )
    .unwrap();
    let t = render_table(&[without.clone()], &["(1)".into()]);
    assert!(!t.contains("GDPpc x metric"));
    assert!(t.contains("Initial metric"));
    let t2 = render_table(&[with, without], &["(1)".into(), "(2)".into()]);
    assert!(t2.contains("GDPpc x metric"));
    assert!(t2.contains("Observations"));
    assert!(t2.contains("N clusters"));
}

#[test]
fn covariance_helper_rejects_one_cluster() {
    let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
    let u = DVector::from_row_slice(&[0.1, -0.1, 0.0]);
    let inv = DMatrix::from_row_slice(1, 1, &[1.0 / 14.0]);
    assert!(cluster_robust_covariance(&x, &u, &[0, 0, 0], &inv, 1).is_err());
}
