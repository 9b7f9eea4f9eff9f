//! Dense linear algebra shared by the model modules.
//!
//! Everything is `f64` and row-major. Ordinary least squares goes through a
//! Householder QR factorization; Cholesky is used for systems that are
//! positive-definite by construction (ridge normal equations, IRLS steps,
//! information matrices).

mod matrix;
mod optimize;

pub use matrix::{dot, mean, norm2, norm_inf, Matrix};
pub use optimize::{nelder_mead, Minimum, NelderMeadOptions};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive-definite: non-positive pivot {value:e} at index {pivot}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("design is rank deficient: |R[{index},{index}]| = {value:e} below tolerance")]
    RankDeficient { index: usize, value: f64 },
    #[error("underdetermined system: {rows} rows for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("non-finite entry in input")]
    NonFinite,
}

/// Relative symmetry tolerance accepted by [`Cholesky::factor`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// A QR diagonal below this fraction of the largest one signals rank deficiency.
pub const RANK_TOL: f64 = 1e-10;

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self, NumericsError> {
        let (rows, cols) = a.shape();
        if rows != cols {
            return Err(NumericsError::NotSquare { rows, cols });
        }
        if !a.is_finite() {
            return Err(NumericsError::NonFinite);
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut asym = 0.0_f64;
        for i in 0..rows {
            for j in 0..i {
                asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(NumericsError::NotSymmetric { asymmetry: asym });
        }

        let n = rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(NumericsError::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let l = &self.l;
        // forward: L z = b
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        // backward: Lᵀ x = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        Ok(z)
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }

    /// `ln det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * self.l[(i, i)].ln()).sum()
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    Cholesky::factor(a)?.solve(b)
}

/// Householder QR of a tall matrix, kept in compact form.
#[derive(Debug, Clone)]
pub struct Qr {
    /// Upper triangle holds R; below the diagonal, the Householder vectors.
    qr: Matrix,
    /// Householder scalars.
    tau: Vec<f64>,
    r_diag: Vec<f64>,
}

impl Qr {
    pub fn factor(x: &Matrix) -> Result<Self, NumericsError> {
        let (n, p) = x.shape();
        if n < p {
            return Err(NumericsError::Underdetermined { rows: n, cols: p });
        }
        if !x.is_finite() {
            return Err(NumericsError::NonFinite);
        }
        let mut qr = x.clone();
        let mut tau = vec![0.0; p];
        let mut r_diag = vec![0.0; p];
        for k in 0..p {
            let mut norm = 0.0;
            for i in k..n {
                norm += qr[(i, k)] * qr[(i, k)];
            }
            let norm = norm.sqrt();
            if norm == 0.0 {
                r_diag[k] = 0.0;
                tau[k] = 0.0;
                continue;
            }
            let alpha = if qr[(k, k)] > 0.0 { -norm } else { norm };
            // v = x - alpha e1, stored in place with v[k] kept separately
            let v0 = qr[(k, k)] - alpha;
            qr[(k, k)] = v0;
            let mut vnorm2 = 0.0;
            for i in k..n {
                vnorm2 += qr[(i, k)] * qr[(i, k)];
            }
            let t = 2.0 / vnorm2;
            for j in (k + 1)..p {
                let mut s = 0.0;
                for i in k..n {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= t;
                for i in k..n {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
            tau[k] = t;
            r_diag[k] = alpha;
        }
        Ok(Self { qr, tau, r_diag })
    }

    pub fn r_diagonal(&self) -> &[f64] {
        &self.r_diag
    }

    /// Errors when the smallest |R_ii| is below `RANK_TOL` times the largest.
    pub fn check_rank(&self) -> Result<(), NumericsError> {
        let largest = self.r_diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (i, d) in self.r_diag.iter().enumerate() {
            if d.abs() <= RANK_TOL * largest || largest == 0.0 {
                return Err(NumericsError::RankDeficient {
                    index: i,
                    value: d.abs(),
                });
            }
        }
        Ok(())
    }

    /// Applies `Qᵀ` to `y` in place.
    fn apply_qt(&self, y: &mut [f64]) {
        let (n, p) = self.qr.shape();
        for k in 0..p {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in k..n {
                s += self.qr[(i, k)] * y[i];
            }
            s *= self.tau[k];
            for i in k..n {
                y[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Least-squares solution of `X β ≈ y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let (n, p) = self.qr.shape();
        if y.len() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                found: y.len(),
            });
        }
        self.check_rank()?;
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut beta = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = qty[i];
            for j in (i + 1)..p {
                s -= self.qr[(i, j)] * beta[j];
            }
            beta[i] = s / self.r_diag[i];
        }
        Ok(beta)
    }
}

/// Minimizes `‖y − Xβ‖₂` by Householder QR.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if y.len() != x.rows() {
        return Err(NumericsError::DimensionMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    Qr::factor(x)?.solve(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn approx_eq(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cholesky_identity() {
        let x = cholesky_solve(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert!(approx_eq(&x, &[1.0, 2.0, 3.0], 1e-15));
    }

    #[test]
    fn cholesky_diagonal() {
        let a = Matrix::from_rows(&[[4.0, 0.0], [0.0, 9.0]]).unwrap();
        let x = cholesky_solve(&a, &[8.0, 27.0]).unwrap();
        assert!(approx_eq(&x, &[2.0, 3.0], 1e-15));
    }

    #[test]
    fn cholesky_indefinite_reports_pivot() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        match cholesky_solve(&a, &[1.0, 1.0]) {
            Err(NumericsError::NotPositiveDefinite { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert!((value + 3.0).abs() < 1e-12);
            }
            other => panic!("expected indefinite error, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]).unwrap();
        assert!(matches!(
            cholesky_solve(&a, &[1.0, 1.0]),
            Err(NumericsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn cholesky_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(1..8);
            let m = Matrix::from_vec(
                n,
                n,
                (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let mut a = m.gram();
            for i in 0..n {
                a[(i, i)] += 0.5;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let x = cholesky_solve(&a, &b).unwrap();
            let ax = a.matvec(&x).unwrap();
            let resid: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm_inf(&resid) <= 1e-8 * (1.0 + norm_inf(&b)));
        }
    }

    #[test]
    fn least_squares_mean() {
        let x = Matrix::filled(3, 1, 1.0);
        let beta = least_squares(&x, &[1.0, 2.0, 3.0]).unwrap();
        assert!(approx_eq(&beta, &[2.0], 1e-14));
    }

    #[test]
    fn least_squares_exact_line() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]).unwrap();
        let beta = least_squares(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert!(approx_eq(&beta, &[0.0, 2.0], 1e-12));
    }

    #[test]
    fn least_squares_duplicate_column_is_rank_deficient() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        assert!(matches!(
            least_squares(&x, &[1.0, 2.0, 3.0]),
            Err(NumericsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn least_squares_residual_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, p) = (40, 4);
        let x = Matrix::from_vec(
            n,
            p,
            (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect(),
        )
        .unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let beta = least_squares(&x, &y).unwrap();
        let fitted = x.matvec(&beta).unwrap();
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let xtr = x.tr_matvec(&resid).unwrap();
        assert!(norm_inf(&xtr) < 1e-8);
    }

    #[test]
    fn cholesky_agrees_with_least_squares_on_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = 5;
            let m = Matrix::from_vec(
                n,
                n,
                (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let mut a = m.gram();
            for i in 0..n {
                a[(i, i)] += 1.0;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x1 = cholesky_solve(&a, &b).unwrap();
            let x2 = least_squares(&a, &b).unwrap();
            assert!(approx_eq(&x1, &x2, 1e-8));
        }
    }

    proptest::proptest! {
        #[test]
        fn least_squares_recovers_planted_coefficients(
            seed in 0u64..10_000,
            beta in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 30;
            let x = Matrix::from_vec(n, 3, (0..n * 3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let y = x.matvec(&beta).unwrap();
            let got = least_squares(&x, &y).unwrap();
            proptest::prop_assert!(approx_eq(&got, &beta, 1e-8));
        }
    }
}
