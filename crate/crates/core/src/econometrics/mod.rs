//! Growth panels, pooled OLS and fixed-effects regressions, predictions.

mod fixed_effects;
mod ols;
mod panel;
mod predict;
mod table;

pub use fixed_effects::fixed_effects;
pub use ols::{cluster_robust_covariance, design, pooled_ols, Design, Estimator, Formula, RegressionResult, Residual};
pub use panel::{
    build_panel, cagr, country_metric, is_control, prediction_features, standardize, CovariateTransforms, Exclusion,
    Panel, PanelObservation, PanelSpec, CONTROLS,
};
pub use predict::{predict_batch, predict_growth, PeriodConvention, Prediction, SkippedPrediction};
pub use table::{render_table, sig3};
