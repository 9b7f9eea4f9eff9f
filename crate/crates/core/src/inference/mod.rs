//! Hypothesis tests, regression diagnostics and classification metrics.

mod diagnostics;
pub mod distributions;
mod metrics;

pub use diagnostics::{
    adjusted_r2, breusch_godfrey, durbin_watson, f_statistic, f_test_from_r2, jarque_bera,
    r_squared, regression_report, regression_validity, select_best_univariate, skew_kurtosis,
    univariate_r2, vif, wald_test, RegressionReport, UnivariateScore, Validity,
    REASON_AUTOCORRELATION, REASON_INSIGNIFICANT, REASON_LM_AUTOCORRELATION, REASON_NON_NORMAL,
};
pub use metrics::{
    confusion_and_accuracy, jaccard, roc_auc, roc_curve, silhouette, ConfusionMatrix,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("need at least {needed} columns, got {got}")]
    TooFewColumns { needed: usize, got: usize },
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("input is empty")]
    Empty,
    #[error("both sets are empty")]
    BothSetsEmpty,
    #[error("model did not converge")]
    Unconverged,
    #[error("auxiliary regression failed: {0}")]
    Numerics(#[from] NumericsError),
    #[error("report is missing {0}")]
    MissingField(&'static str),
}

/// Degrees of freedom of a reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Df {
    One(f64),
    Two(f64, f64),
}

/// A test statistic with its reference-distribution tail probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub name: String,
    #[serde(with = "crate::serde_f64")]
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub df: Option<Df>,
    pub reject_at_5pct: Option<bool>,
}

impl StatTestResult {
    pub fn with_p_value(name: impl Into<String>, statistic: f64, p_value: f64, df: Df) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            name: name.into(),
            statistic,
            p_value: Some(p_value),
            df: Some(df),
            reject_at_5pct: Some(p_value < 0.05),
        }
    }

    pub fn statistic_only(name: impl Into<String>, statistic: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_value: None,
            df: None,
            reject_at_5pct: None,
        }
    }
}
