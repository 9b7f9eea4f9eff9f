use crate::data::DesignMatrix;
use crate::numerics::{dot, mean};

use super::{FitError, LinearFit, Penalty};

/// Coordinate descent stops when no standardized coefficient moves more than this.
pub const LASSO_TOL: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// Column-standardized copy of the design (population standard deviation).
struct Standardized {
    /// Column-major standardized features; constant columns are left at zero.
    columns: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

fn standardize(x: &DesignMatrix) -> Standardized {
    let means = x.values.column_means();
    let scales = x.values.column_std();
    let columns = (0..x.n_cols())
        .map(|j| {
            let col = x.values.column(j);
            if scales[j] > 0.0 {
                col.iter().map(|v| (v - means[j]) / scales[j]).collect()
            } else {
                vec![0.0; col.len()]
            }
        })
        .collect();
    Standardized {
        columns,
        means,
        scales,
    }
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Smallest λ at which every standardized slope is exactly zero.
pub fn lasso_lambda_max(x: &DesignMatrix) -> f64 {
    let std = standardize(x);
    let y_mean = mean(&x.target);
    let r: Vec<f64> = x.target.iter().map(|v| v - y_mean).collect();
    let n = x.n_rows() as f64;
    std.columns
        .iter()
        .map(|c| (dot(c, &r) / n).abs())
        .fold(0.0, f64::max)
}

/// Lasso by cyclic coordinate descent on `(1/2n)‖y − β₀ − Zβ‖² + λ‖β‖₁`
/// over standardized features `Z`.
pub fn fit_lasso(x: &DesignMatrix, lambda: f64) -> Result<LinearFit, FitError> {
    fit_lasso_traced(x, lambda).map(|(fit, _)| fit)
}

/// As [`fit_lasso`], also returning the objective after every sweep.
pub fn fit_lasso_traced(x: &DesignMatrix, lambda: f64) -> Result<(LinearFit, Vec<f64>), FitError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(FitError::NonPositiveLambda(lambda));
    }
    let n = x.n_rows();
    if n == 0 {
        return Err(FitError::TooFewRows { rows: 0, needed: 0 });
    }
    let nf = n as f64;
    let p = x.n_cols();
    let std = standardize(x);
    let y_mean = mean(&x.target);
    let mut resid: Vec<f64> = x.target.iter().map(|v| v - y_mean).collect();
    let mut beta = vec![0.0; p];

    let objective = |resid: &[f64], beta: &[f64]| {
        dot(resid, resid) / (2.0 * nf) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };

    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            if std.scales[j] == 0.0 {
                continue;
            }
            let col = &std.columns[j];
            // zᵀz / n = 1 for standardized columns
            let rho = dot(col, &resid) / nf + beta[j];
            let new = soft_threshold(rho, lambda);
            let delta = new - beta[j];
            if delta != 0.0 {
                for (r, z) in resid.iter_mut().zip(col) {
                    *r -= z * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let obj = objective(&resid, &beta);
        debug_assert!(
            trace
                .last()
                .is_none_or(|&prev: &f64| obj <= prev + 1e-12 * prev.abs().max(1.0)),
            "lasso objective increased"
        );
        trace.push(obj);
        if max_change < LASSO_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("lasso did not converge in {LASSO_MAX_SWEEPS} sweeps (lambda = {lambda})");
    }

    let coefficients: Vec<f64> = beta
        .iter()
        .zip(&std.scales)
        .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
        .collect();
    let intercept = y_mean - dot(&std.means, &coefficients);
    Ok((
        LinearFit {
            intercept,
            names: x.column_names.clone(),
            coefficients,
            lambda,
            penalty: Penalty::L1,
            n_train: n,
            converged,
            iterations: sweeps,
        },
        trace,
    ))
}
