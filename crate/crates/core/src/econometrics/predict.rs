//! Growth predictions from a fitted model.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ols::RegressionResult;
use super::panel::PanelObservation;
use crate::error::{Error, Result};

/// Year-dummy setting for observations outside the estimation periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodConvention {
    /// All dummies zero (the first estimation period).
    Reference,
    /// The last estimation period's dummy.
    #[default]
    Latest,
    /// Each dummy at its sample mean.
    Mean,
}

impl FromStr for PeriodConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(PeriodConvention::Reference),
            "latest" => Ok(PeriodConvention::Latest),
            "mean" => Ok(PeriodConvention::Mean),
            other => Err(Error::InvalidConfig(format!("unknown period convention `{other}`"))),
        }
    }
}

/// Linear prediction for one observation. In-sample period starts use their
/// own dummy; others follow `convention`. Fixed-effects models use the
/// country's estimated effect when it has one, and the constant otherwise.
pub fn predict_growth(
    model: &RegressionResult,
    features: &PanelObservation,
    convention: PeriodConvention,
) -> Result<f64> {
    let in_sample = model.periods.contains(&features.period_start);
    let mut y = 0.0;
    for (i, name) in model.names.iter().enumerate() {
        let b = model.coefficients[i];
        let v = if name == "const" {
            match model.country_effects.as_ref().and_then(|e| e.get(&features.country)) {
                Some(&effect) => {
                    y += effect;
                    continue;
                }
                None => 1.0,
            }
        } else if let Some(year) = name.strip_prefix("year_").and_then(|s| s.parse::<i32>().ok()) {
            let d = model
                .year_dummies
                .iter()
                .position(|&t| t == year)
                .expect("dummy listed");
            if in_sample {
                f64::from(u8::from(features.period_start == year))
            } else {
                match convention {
                    PeriodConvention::Reference => 0.0,
                    PeriodConvention::Latest => f64::from(u8::from(model.periods.last() == Some(&year))),
                    PeriodConvention::Mean => model.dummy_means[d],
                }
            }
        } else {
            features.feature(name).ok_or_else(|| Error::MissingFeature {
                country: features.country.clone(),
                feature: name.clone(),
            })?
        };
        y += b * v;
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub country: String,
    pub predicted_growth: f64,
    /// 1 = highest predicted growth.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPrediction {
    pub country: String,
    pub reason: String,
}

/// Predicts every observation, ranked by descending prediction with ties
/// broken by country code. Observations with missing features are skipped.
pub fn predict_batch(
    model: &RegressionResult,
    features: &[PanelObservation],
    convention: PeriodConvention,
) -> (Vec<Prediction>, Vec<SkippedPrediction>) {
    let mut preds = Vec::new();
    let mut skipped = Vec::new();
    for f in features {
        match predict_growth(model, f, convention) {
            Ok(p) => preds.push((f.country.clone(), p)),
            Err(e) => skipped.push(SkippedPrediction {
                country: f.country.clone(),
                reason: e.to_string(),
            }),
        }
    }
    preds.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let ranked = preds
        .into_iter()
        .enumerate()
        .map(|(i, (country, predicted_growth))| Prediction {
            country,
            predicted_growth,
            rank: i + 1,
        })
        .collect();
    (ranked, skipped)
}
