use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::numerics::{dot, norm2, Cholesky, Matrix};

use super::{check_columns, FitError};

pub const IRLS_TOL: f64 = 1e-9;
pub const IRLS_MAX_ITER: usize = 100;
/// Coefficient norm beyond which the fit is declared separated.
const SEPARATION_NORM: f64 = 1e4;
/// Fitted probabilities this close to every label indicate complete separation.
const PERFECT_FIT_TOL: f64 = 1e-6;
const MAX_HALVINGS: usize = 30;

/// Fitted logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub intercept: f64,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept_se: f64,
    pub standard_errors: Vec<f64>,
    pub converged: bool,
    /// Set when separation was detected.
    pub separated: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood of the intercept-only model.
    pub null_log_likelihood: f64,
    pub n_train: usize,
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^η)` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn log_likelihood(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    x.row_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = dot(row, beta);
            yi * eta - softplus(eta)
        })
        .sum()
}

impl LogisticFit {
    /// McFadden pseudo-R².
    pub fn pseudo_r2(&self) -> f64 {
        1.0 - self.log_likelihood / self.null_log_likelihood
    }

    pub fn predict_proba(&self, x: &DesignMatrix) -> Result<Vec<f64>, FitError> {
        check_columns(&self.names, &x.column_names)?;
        self.predict_proba_matrix(&x.values)
    }

    pub fn predict_proba_matrix(&self, x: &Matrix) -> Result<Vec<f64>, FitError> {
        if x.cols() != self.coefficients.len() {
            return Err(FitError::WidthMismatch {
                expected: self.coefficients.len(),
                found: x.cols(),
            });
        }
        Ok(x.row_iter().map(|r| self.predict_proba_row(r)).collect())
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.intercept + dot(&self.coefficients, row))
    }
}

/// Maximum-likelihood logistic regression by IRLS with step halving.
///
/// The target must be 0/1. Separated data returns `converged = false`
/// rather than an error.
pub fn fit_logistic(x: &DesignMatrix) -> Result<LogisticFit, FitError> {
    fit_logistic_traced(x).map(|(fit, _)| fit)
}

/// As [`fit_logistic`], also returning the log-likelihood after each iteration
/// (the first entry is at the zero start).
pub fn fit_logistic_traced(x: &DesignMatrix) -> Result<(LogisticFit, Vec<f64>), FitError> {
    if let Some(&bad) = x.target.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(FitError::NonBinaryTarget(bad));
    }
    let positives = x.target.iter().filter(|&&v| v == 1.0).count();
    let n = x.n_rows();
    if positives == 0 || positives == n {
        return Err(FitError::SingleClass);
    }
    let xi = x.values.with_intercept();
    let y = &x.target;
    let p = xi.cols();

    let mut beta = vec![0.0; p];
    let mut ll = log_likelihood(&xi, y, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;

    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let mut grad = vec![0.0; p];
        let mut hess = Matrix::zeros(p, p);
        for (row, &yi) in xi.row_iter().zip(y) {
            let mu = sigmoid(dot(row, &beta));
            let w = mu * (1.0 - mu);
            for a in 0..p {
                grad[a] += (yi - mu) * row[a];
                for b in a..p {
                    hess[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        let step = match Cholesky::factor(&hess).and_then(|c| c.solve(&grad)) {
            Ok(s) => s,
            Err(_) => {
                separated = true;
                break;
            }
        };

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let cand_ll = log_likelihood(&xi, y, &cand);
            if cand_ll.is_finite() && cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, cand_ll)) = accepted else {
            // no ascent direction left at working precision
            converged = true;
            break;
        };
        let change = cand_ll - ll;
        beta = cand;
        ll = cand_ll;
        trace.push(ll);

        if norm2(&beta) > SEPARATION_NORM {
            separated = true;
            break;
        }
        if change.abs() < IRLS_TOL {
            converged = true;
            break;
        }
    }

    let max_gap = xi
        .row_iter()
        .zip(y)
        .map(|(row, &yi)| (yi - sigmoid(dot(row, &beta))).abs())
        .fold(0.0, f64::max);
    if max_gap < PERFECT_FIT_TOL {
        separated = true;
    }
    if separated {
        converged = false;
    }

    let ses = standard_errors(&xi, &beta).unwrap_or_else(|| vec![f64::INFINITY; p]);
    let rate = positives as f64 / n as f64;
    let null_ll = n as f64 * (rate * rate.ln() + (1.0 - rate) * (1.0 - rate).ln());

    Ok((
        LogisticFit {
            intercept: beta[0],
            names: x.column_names.clone(),
            coefficients: beta[1..].to_vec(),
            intercept_se: ses[0],
            standard_errors: ses[1..].to_vec(),
            converged,
            separated,
            iterations,
            log_likelihood: ll,
            null_log_likelihood: null_ll,
            n_train: n,
        },
        trace,
    ))
}

/// Square roots of the diagonal of the inverse observed information.
fn standard_errors(xi: &Matrix, beta: &[f64]) -> Option<Vec<f64>> {
    let p = xi.cols();
    let mut info = Matrix::zeros(p, p);
    for row in xi.row_iter() {
        let mu = sigmoid(dot(row, beta));
        let w = mu * (1.0 - mu);
        for a in 0..p {
            for b in 0..p {
                info[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    let inv = Cholesky::factor(&info).ok()?.inverse();
    let se: Vec<f64> = (0..p).map(|i| inv[(i, i)].sqrt()).collect();
    se.iter().all(|s| s.is_finite() && *s > 0.0).then_some(se)
}
