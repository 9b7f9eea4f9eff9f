//! K-means used as a three-class classifier and an ordinal SVM with two
//! parallel separating hyperplanes.

mod kmeans;
mod svm;

pub use kmeans::{
    kmeans_classify, kmeans_fit, KMeansModel, KMEANS_DEFAULT_RESTARTS, KMEANS_MAX_ITER,
};
pub use svm::{ordinal_objective, ordinal_svm_fit, ordinal_svm_predict, OrdinalSvmModel};

use thiserror::Error;

use crate::data::ClassLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("need at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("feature matrix contains non-finite values")]
    NonFinite,
    #[error("expected {expected} columns, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("expected {expected} labels, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("class {0} missing from training labels")]
    MissingClass(ClassLabel),
    #[error("regularization C must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("at least one epoch is required")]
    NoEpochs,
}
