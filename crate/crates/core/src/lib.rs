//! Statistical-learning and inference toolkit for movie-success benchmarking.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: dense matrices, Cholesky and QR solves.
//! - [`data`]: CSV ingestion, genre binarization, metascore binning, year split.
//! - [`linear`]: OLS, ridge, lasso and logistic regression.
//! - [`classify`]: k-means used as a classifier and an ordinal SVM.
//! - [`timeseries`]: monthly series, ACF/PACF, ADF, decomposition, SARIMAX.
//! - [`neural`]: a small multilayer perceptron trained with Adam.
//! - [`inference`]: hypothesis tests, distributions and evaluation metrics.
//! - [`bench`]: the end-to-end pipeline and report rendering.

pub mod classify;
pub mod timeseries;
pub mod neural;
pub mod bench;
pub mod data;
pub mod inference;
pub mod linear;
pub mod numerics;

pub(crate) mod serde_f64;
