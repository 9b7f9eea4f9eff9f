//! Linear-model family: OLS, ridge, lasso and logistic regression.
//!
//! All fits take a [`DesignMatrix`] and add an unpenalized intercept.
//! Ridge centers the features; lasso standardizes them internally and maps
//! the coefficients back to the original scale.

mod lasso;
mod logistic;

pub use lasso::{fit_lasso, fit_lasso_traced, lasso_lambda_max, LASSO_MAX_SWEEPS, LASSO_TOL};
pub use logistic::{fit_logistic, fit_logistic_traced, LogisticFit, IRLS_MAX_ITER, IRLS_TOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Binner, DesignMatrix};
use crate::inference::{confusion_and_accuracy, ConfusionMatrix};
use crate::numerics::{cholesky_solve, least_squares, Matrix, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("need more than {needed} rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("regularization strength must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("target must contain both classes")]
    SingleClass,
    #[error("target must be 0/1, found {0}")]
    NonBinaryTarget(f64),
    #[error("feature columns {found:?} do not match fitted columns {expected:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("feature matrix has {found} columns, model expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("evaluation set is empty")]
    EmptyEvaluation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    None,
    L2,
    L1,
}

/// Fitted linear predictor `ŷ = intercept + Σ coefficients·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub penalty: Penalty,
    pub n_train: usize,
    /// Always true for closed-form fits; the lasso reports its own status.
    pub converged: bool,
    pub iterations: usize,
}

impl LinearFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>, FitError> {
        check_columns(&self.names, &x.column_names)?;
        self.predict_matrix(&x.values)
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>, FitError> {
        if x.cols() != self.coefficients.len() {
            return Err(FitError::WidthMismatch {
                expected: self.coefficients.len(),
                found: x.cols(),
            });
        }
        Ok(x.row_iter().map(|row| self.predict_row(row)).collect())
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + crate::numerics::dot(&self.coefficients, row)
    }
}

pub(crate) fn check_columns(expected: &[String], found: &[String]) -> Result<(), FitError> {
    if expected == found {
        Ok(())
    } else {
        Err(FitError::ColumnMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        })
    }
}

/// Ordinary least squares with an intercept (SLR when there is one column).
pub fn fit_ols(x: &DesignMatrix) -> Result<LinearFit, FitError> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if n <= p + 1 {
        return Err(FitError::TooFewRows {
            rows: n,
            needed: p + 1,
        });
    }
    let beta = least_squares(&x.values.with_intercept(), &x.target)?;
    Ok(LinearFit {
        intercept: beta[0],
        names: x.column_names.clone(),
        coefficients: beta[1..].to_vec(),
        lambda: 0.0,
        penalty: Penalty::None,
        n_train: n,
        converged: true,
        iterations: 0,
    })
}

/// Ridge regression minimizing `‖y − β₀ − Xβ‖² + λ‖β‖²`.
pub fn fit_ridge(x: &DesignMatrix, lambda: f64) -> Result<LinearFit, FitError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(FitError::NonPositiveLambda(lambda));
    }
    let n = x.n_rows();
    if n == 0 {
        return Err(FitError::TooFewRows { rows: 0, needed: 0 });
    }
    let p = x.n_cols();
    let means = x.values.column_means();
    let y_mean = crate::numerics::mean(&x.target);
    let mut centered = x.values.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    let yc: Vec<f64> = x.target.iter().map(|v| v - y_mean).collect();
    let mut a = centered.gram();
    for j in 0..p {
        a[(j, j)] += lambda;
    }
    let b = centered.tr_matvec(&yc)?;
    let beta = cholesky_solve(&a, &b)?;
    let intercept = y_mean - crate::numerics::dot(&means, &beta);
    Ok(LinearFit {
        intercept,
        names: x.column_names.clone(),
        coefficients: beta,
        lambda,
        penalty: Penalty::L2,
        n_train: n,
        converged: true,
        iterations: 0,
    })
}

/// Accuracy and confusion matrix after binning continuous predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedEvaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Clamps predictions to [0, 100], bins them and scores against the binned target.
pub fn evaluate_binned(
    fit: &LinearFit,
    x: &DesignMatrix,
    binner: &Binner,
) -> Result<BinnedEvaluation, FitError> {
    if x.n_rows() == 0 {
        return Err(FitError::EmptyEvaluation);
    }
    let pred = fit.predict(x)?;
    let predicted: Vec<_> = pred.iter().map(|&v| binner.label(v)).collect();
    let truth: Vec<_> = x.target.iter().map(|&v| binner.label(v)).collect();
    let (confusion, accuracy) =
        confusion_and_accuracy(&predicted, &truth).map_err(|_| FitError::EmptyEvaluation)?;
    Ok(BinnedEvaluation {
        accuracy,
        confusion,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn design(rows: &[&[f64]], y: &[f64]) -> DesignMatrix {
        let values = Matrix::from_rows(rows).unwrap();
        let names = (0..values.cols()).map(|j| format!("x{j}")).collect();
        DesignMatrix::new(names, values, y.to_vec(), "y").unwrap()
    }

    pub(crate) fn random_design(seed: u64, n: usize, p: usize) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = Matrix::from_vec(
            n,
            p,
            (0..n * p).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y = values
            .row_iter()
            .map(|r| 1.5 + crate::numerics::dot(r, &beta) + rng.random_range(-1.0..1.0))
            .collect();
        let names = (0..p).map(|j| format!("x{j}")).collect();
        DesignMatrix::new(names, values, y, "y").unwrap()
    }

    /// Normal-equation oracle via Gauss-Jordan elimination on [XᵀX | Xᵀy].
    pub(crate) fn normal_equation_oracle(x: &DesignMatrix) -> Vec<f64> {
        let xi = x.values.with_intercept();
        let p = xi.cols();
        let mut aug = vec![vec![0.0; p + 1]; p];
        for (row, &y) in xi.row_iter().zip(&x.target) {
            for a in 0..p {
                for b in 0..p {
                    aug[a][b] += row[a] * row[b];
                }
                aug[a][p] += row[a] * y;
            }
        }
        for c in 0..p {
            let piv = (c..p)
                .max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs()))
                .unwrap();
            aug.swap(c, piv);
            let d = aug[c][c];
            for v in aug[c].iter_mut() {
                *v /= d;
            }
            for r in 0..p {
                if r != c {
                    let f = aug[r][c];
                    let pivot_row = aug[c].clone();
                    for (v, pv) in aug[r].iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        aug.iter().map(|r| r[p]).collect()
    }

    #[test]
    fn ols_exact_line() {
        let x = design(&[&[1.0], &[2.0], &[3.0]], &[2.0, 4.0, 6.0]);
        let fit = fit_ols(&x).unwrap();
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ols_constant_target() {
        let mut x = random_design(1, 20, 3);
        x.target = vec![4.2; 20];
        let fit = fit_ols(&x).unwrap();
        assert!((fit.intercept - 4.2).abs() < 1e-10);
        assert!(fit.coefficients.iter().all(|b| b.abs() < 1e-10));
    }

    #[test]
    fn ols_matches_normal_equations() {
        let x = random_design(7, 50, 3);
        let fit = fit_ols(&x).unwrap();
        let oracle = normal_equation_oracle(&x);
        assert!((fit.intercept - oracle[0]).abs() < 1e-8);
        for (b, o) in fit.coefficients.iter().zip(&oracle[1..]) {
            assert!((b - o).abs() < 1e-8);
        }
    }

    #[test]
    fn ols_errors() {
        let x = design(&[&[1.0], &[2.0]], &[1.0, 2.0]);
        assert!(matches!(fit_ols(&x), Err(FitError::TooFewRows { .. })));
        let dup = design(
            &[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0], &[4.0, 4.0]],
            &[1.0, 2.0, 3.0, 5.0],
        );
        assert!(matches!(
            fit_ols(&dup),
            Err(FitError::Numerics(NumericsError::RankDeficient { .. }))
        ));
    }

    #[test]
    fn ols_residuals_sum_to_zero_and_are_orthogonal() {
        let x = random_design(3, 60, 4);
        let fit = fit_ols(&x).unwrap();
        let pred = fit.predict(&x).unwrap();
        let resid: Vec<f64> = x.target.iter().zip(&pred).map(|(y, p)| y - p).collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
        let xtr = x.values.tr_matvec(&resid).unwrap();
        assert!(crate::numerics::norm_inf(&xtr) < 1e-8);
    }

    #[test]
    fn ridge_limit_matches_ols() {
        let x = random_design(9, 50, 3);
        let ols = fit_ols(&x).unwrap();
        let ridge = fit_ridge(&x, 1e-10).unwrap();
        assert!((ols.intercept - ridge.intercept).abs() < 1e-6);
        for (a, b) in ols.coefficients.iter().zip(&ridge.coefficients) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn ridge_closed_form_single_feature() {
        let x = design(&[&[-0.5], &[0.5]], &[-0.5, 0.5]);
        let fit = fit_ridge(&x, 1.0).unwrap();
        assert!((fit.coefficients[0] - 0.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn ridge_huge_penalty_shrinks_to_mean() {
        let x = random_design(2, 30, 3);
        let fit = fit_ridge(&x, 1e12).unwrap();
        assert!(fit.coefficients.iter().all(|b| b.abs() < 1e-6));
        assert!((fit.intercept - crate::numerics::mean(&x.target)).abs() < 1e-6);
    }

    #[test]
    fn ridge_rejects_non_positive_lambda() {
        let x = random_design(2, 30, 3);
        assert!(matches!(
            fit_ridge(&x, 0.0),
            Err(FitError::NonPositiveLambda(_))
        ));
        assert!(matches!(
            fit_ridge(&x, -1.0),
            Err(FitError::NonPositiveLambda(_))
        ));
    }

    #[test]
    fn ridge_norm_shrinks_monotonically() {
        let x = random_design(4, 40, 4);
        let mut last = f64::INFINITY;
        for lambda in [1e-3, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let fit = fit_ridge(&x, lambda).unwrap();
            let norm = crate::numerics::norm2(&fit.coefficients);
            assert!(norm <= last + 1e-12);
            last = norm;
        }
    }

    #[test]
    fn row_duplication_invariance() {
        let x = random_design(5, 40, 3);
        let mut rows: Vec<Vec<f64>> = x.values.row_iter().map(|r| r.to_vec()).collect();
        rows.extend(rows.clone());
        let mut y = x.target.clone();
        y.extend(x.target.clone());
        let doubled = DesignMatrix::new(
            x.column_names.clone(),
            Matrix::from_rows(&rows).unwrap(),
            y,
            "y",
        )
        .unwrap();

        let close = |a: &LinearFit, b: &LinearFit| {
            (a.intercept - b.intercept).abs() < 1e-8
                && a.coefficients
                    .iter()
                    .zip(&b.coefficients)
                    .all(|(p, q)| (p - q).abs() < 1e-8)
        };
        assert!(close(&fit_ols(&x).unwrap(), &fit_ols(&doubled).unwrap()));
        assert!(close(
            &fit_lasso(&x, 0.05).unwrap(),
            &fit_lasso(&doubled, 0.05).unwrap()
        ));
        // The unscaled ridge data term doubles with the rows, so λ doubles too.
        assert!(close(
            &fit_ridge(&x, 3.0).unwrap(),
            &fit_ridge(&doubled, 6.0).unwrap()
        ));
    }

    #[test]
    fn prediction_rules() {
        let fit = LinearFit {
            intercept: 5.0,
            names: vec!["a".into(), "b".into()],
            coefficients: vec![0.0, 0.0],
            lambda: 0.0,
            penalty: Penalty::None,
            n_train: 10,
            converged: true,
            iterations: 0,
        };
        let x = DesignMatrix::new(
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[[1.0, 2.0], [3.0, -4.0]]).unwrap(),
            vec![0.0, 0.0],
            "y",
        )
        .unwrap();
        assert_eq!(fit.predict(&x).unwrap(), vec![5.0, 5.0]);
        let swapped = x.select(&["b".into(), "a".into()]).unwrap();
        assert!(matches!(
            fit.predict(&swapped),
            Err(FitError::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn binned_evaluation() {
        let x = design(&[&[10.0], &[50.0], &[80.0]], &[10.0, 50.0, 80.0]);
        let perfect = fit_ols(&design(
            &[&[0.0], &[1.0], &[2.0], &[3.0]],
            &[0.0, 1.0, 2.0, 3.0],
        ))
        .unwrap();
        let eval = evaluate_binned(&perfect, &x, &Binner::default()).unwrap();
        assert!((eval.accuracy - 1.0).abs() < 1e-12);
        assert_eq!(eval.confusion.trace(), 3);
        assert_eq!(eval.confusion.total(), 3);

        let constant = LinearFit {
            intercept: 50.0,
            coefficients: vec![0.0],
            ..perfect.clone()
        };
        let hits = design(&[&[1.0], &[2.0]], &[70.0, 90.0]);
        assert_eq!(
            evaluate_binned(&constant, &hits, &Binner::default())
                .unwrap()
                .accuracy,
            0.0
        );
    }

    #[test]
    fn binned_evaluation_clamps() {
        let fit = LinearFit {
            intercept: 250.0,
            names: vec!["x0".into()],
            coefficients: vec![0.0],
            lambda: 0.0,
            penalty: Penalty::None,
            n_train: 1,
            converged: true,
            iterations: 0,
        };
        let x = design(&[&[1.0]], &[100.0]);
        assert_eq!(
            evaluate_binned(&fit, &x, &Binner::default())
                .unwrap()
                .accuracy,
            1.0
        );
    }
}
