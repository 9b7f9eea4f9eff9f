//! ARMA processes in state-space form and the Kalman filter.
//!
//! The state follows Harvey's representation with dimension
//! `r = max(p, q + 1)`:
//!
//! ```text
//! α_{t+1} = T α_t + R η_t,   y_t = Z α_t,   η_t ~ N(0, σ²)
//! ```
//!
//! where `T` has the AR coefficients in its first column and ones on the
//! superdiagonal, `R = (1, θ_1, …, θ_{r−1})ᵀ` and `Z = e_1`. Everything below
//! works in units of σ², which lets the innovation variance be concentrated
//! out of the likelihood.

use std::f64::consts::PI;

use crate::numerics::Matrix;

/// Prior variance used when the stationary covariance cannot be computed.
pub const DIFFUSE_PRIOR_VARIANCE: f64 = 1e7;
const LYAPUNOV_MAX_DOUBLINGS: usize = 64;
const STEADY_STATE_TOL: f64 = 1e-11;

/// Maps unconstrained reals to the coefficients of a stationary AR
/// polynomial `1 − Σ φ_i L^i`: each value becomes a partial
/// autocorrelation `x/√(1+x²)` in (−1, 1), and the Durbin-Levinson
/// recursion turns those into coefficients.
pub fn pacf_to_coefficients(x: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(x.len());
    for (k, &v) in x.iter().enumerate() {
        let r = v / (1.0 + v * v).sqrt();
        let mut next: Vec<f64> = (0..k).map(|j| phi[j] - r * phi[k - 1 - j]).collect();
        next.push(r);
        phi = next;
    }
    phi
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Multiplies out `(1 − Σφ L^i)(1 − ΣΦ L^{s·j})` and `(1 + Σθ L^i)(1 + ΣΘ L^{s·j})`,
/// returning the full AR coefficients (sign convention `1 − Σ`) and MA
/// coefficients (sign convention `1 + Σ`).
pub fn expand_polynomials(
    ar: &[f64],
    seasonal_ar: &[f64],
    ma: &[f64],
    seasonal_ma: &[f64],
    s: usize,
) -> (Vec<f64>, Vec<f64>) {
    let lag_poly = |coefs: &[f64], step: usize, sign: f64| {
        let mut p = vec![0.0; coefs.len() * step + 1];
        p[0] = 1.0;
        for (i, c) in coefs.iter().enumerate() {
            p[(i + 1) * step] = sign * c;
        }
        p
    };
    let ar_poly = poly_mul(&lag_poly(ar, 1, -1.0), &lag_poly(seasonal_ar, s, -1.0));
    let ma_poly = poly_mul(&lag_poly(ma, 1, 1.0), &lag_poly(seasonal_ma, s, 1.0));
    let mut ar_full: Vec<f64> = ar_poly[1..].iter().map(|c| -c).collect();
    let mut ma_full: Vec<f64> = ma_poly[1..].to_vec();
    while ar_full.last() == Some(&0.0) {
        ar_full.pop();
    }
    while ma_full.last() == Some(&0.0) {
        ma_full.pop();
    }
    (ar_full, ma_full)
}

/// ARMA(p, q) transition structure.
#[derive(Debug, Clone)]
pub(crate) struct Arma {
    /// First column of `T`, padded to `r`.
    pub phi: Vec<f64>,
    /// `R`, with `R[0] = 1`, padded to `r`.
    pub r_vec: Vec<f64>,
}

impl Arma {
    pub fn new(ar: &[f64], ma: &[f64]) -> Self {
        let r = ar.len().max(ma.len() + 1);
        let mut phi = vec![0.0; r];
        phi[..ar.len()].copy_from_slice(ar);
        let mut r_vec = vec![0.0; r];
        r_vec[0] = 1.0;
        r_vec[1..=ma.len()].copy_from_slice(ma);
        Self { phi, r_vec }
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    /// Dense transition matrix.
    pub fn transition(&self) -> Matrix {
        let r = self.dim();
        let mut t = Matrix::zeros(r, r);
        for i in 0..r {
            t[(i, 0)] = self.phi[i];
            if i + 1 < r {
                t[(i, i + 1)] = 1.0;
            }
        }
        t
    }

    /// Stationary state covariance solving `P = T P Tᵀ + R Rᵀ` by the
    /// doubling algorithm; `None` if it fails to converge (non-stationary AR).
    pub fn stationary_covariance(&self) -> Option<Matrix> {
        let r = self.dim();
        let mut p = Matrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                p[(i, j)] = self.r_vec[i] * self.r_vec[j];
            }
        }
        let mut a = self.transition();
        for _ in 0..LYAPUNOV_MAX_DOUBLINGS {
            let apa = a.matmul(&p).ok()?.matmul(&a.transpose()).ok()?;
            let inc = apa.max_abs();
            let mut next = p.clone();
            for i in 0..r {
                for j in 0..r {
                    next[(i, j)] += apa[(i, j)];
                }
            }
            p = next;
            if !p.is_finite() || p.max_abs() > 1e12 {
                return None;
            }
            if inc <= 1e-15 * p.max_abs() {
                return Some(p);
            }
            a = a.matmul(&a).ok()?;
        }
        None
    }

    /// Initial state covariance: stationary if available, else diffuse.
    pub fn initial_covariance(&self) -> (Matrix, bool) {
        match self.stationary_covariance() {
            Some(p) => (p, true),
            None => {
                let r = self.dim();
                let mut p = Matrix::identity(r);
                for i in 0..r {
                    p[(i, i)] = DIFFUSE_PRIOR_VARIANCE;
                }
                (p, false)
            }
        }
    }
}

/// Kalman filter output in σ² units.
#[derive(Debug, Clone)]
pub(crate) struct Filtered {
    /// One-step prediction errors.
    pub v: Vec<f64>,
    /// Their variances divided by σ².
    pub f: Vec<f64>,
    /// Predicted state mean and covariance for the step after the last observation.
    pub a_next: Vec<f64>,
    pub p_next: Matrix,
    pub exact_init: bool,
}

impl Filtered {
    fn sums(&self, skip: usize) -> (f64, f64, f64) {
        let mut log_f = 0.0;
        let mut sq = 0.0;
        for (v, f) in self.v[skip..].iter().zip(&self.f[skip..]) {
            log_f += f.ln();
            sq += v * v / f;
        }
        (log_f, sq, (self.v.len() - skip) as f64)
    }

    /// Log-likelihood at a given σ².
    pub fn log_likelihood(&self, sigma2: f64) -> f64 {
        let (log_f, sq, n) = self.sums(0);
        -0.5 * (n * (2.0 * PI * sigma2).ln() + log_f + sq / sigma2)
    }

    /// σ² maximizing the likelihood of the observations after the first `skip`.
    pub fn sigma2_hat(&self, skip: usize) -> f64 {
        let (_, sq, n) = self.sums(skip);
        sq / n
    }

    /// Log-likelihood of the observations after the first `skip`, conditional
    /// on those, with σ² concentrated out.
    pub fn concentrated_log_likelihood(&self, skip: usize) -> f64 {
        let (log_f, sq, n) = self.sums(skip);
        -0.5 * (n * ((2.0 * PI).ln() + 1.0 + (sq / n).ln()) + log_f)
    }
}

/// Runs the filter over a zero-mean series. Once the covariance recursion
/// reaches its fixed point the gain is frozen.
///
/// The companion form of `T` makes `T P Tᵀ` an O(r²) update, done here on
/// flat row-major buffers.
pub(crate) fn kalman_filter(arma: &Arma, y: &[f64]) -> Filtered {
    let r = arma.dim();
    let w = r + 1;
    let phi = &arma.phi;
    let rv = &arma.r_vec;
    let (p0, exact_init) = arma.initial_covariance();
    let mut p = p0.into_vec();
    // padded with a zero row (pf) and a zero column (tp) so the companion
    // shifts need no edge cases
    let mut pf = vec![0.0; w * w];
    let mut tp = vec![0.0; r * w];
    let mut gain = vec![0.0; r];
    let mut a = vec![0.0; w];
    let mut v_out = Vec::with_capacity(y.len());
    let mut f_out = Vec::with_capacity(y.len());
    let mut steady = false;
    let mut f = p[0];
    for &obs in y {
        let v = obs - a[0];
        if !steady {
            f = p[0];
            for (g, pi) in gain.iter_mut().zip(p.chunks_exact(r)) {
                *g = pi[0] / f;
            }
        }
        v_out.push(v);
        f_out.push(f);
        // a ← T(a + g·v)
        for (ai, g) in a.iter_mut().zip(&gain) {
            *ai += g * v;
        }
        let a0 = a[0];
        for i in 0..r {
            a[i] = phi[i] * a0 + a[i + 1];
        }
        if steady {
            continue;
        }
        // Pf = P − g·P[0,:]
        let (p_row0, _) = p.split_at(r);
        for ((pf_row, p_row), &g) in pf.chunks_exact_mut(w).zip(p.chunks_exact(r)).zip(&gain) {
            for ((x, &pij), &p0j) in pf_row.iter_mut().zip(p_row).zip(p_row0) {
                *x = pij - g * p0j;
            }
        }
        // TP = T·Pf: row i = φ_i·Pf[0,:] + Pf[i+1,:]
        let (pf0, pf_rest) = pf.split_at(w);
        for ((tp_row, below), &ph) in tp.chunks_exact_mut(w).zip(pf_rest.chunks_exact(w)).zip(phi) {
            for ((x, &b), &top) in tp_row[..r].iter_mut().zip(&below[..r]).zip(&pf0[..r]) {
                *x = ph * top + b;
            }
        }
        // P' = TP·Tᵀ + R·Rᵀ: (i,j) = TP[i,0]·φ_j + TP[i,j+1] + R_i R_j
        let mut change = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..r {
            let tp_row = &tp[i * w..(i + 1) * w];
            let (t0, ri) = (tp_row[0], rv[i]);
            for j in i..r {
                let next = t0 * phi[j] + tp_row[j + 1] + ri * rv[j];
                change = change.max((next - p[i * r + j]).abs());
                scale = scale.max(next.abs());
                p[i * r + j] = next;
                p[j * r + i] = next;
            }
        }
        if change <= STEADY_STATE_TOL * scale {
            steady = true;
            f = p[0];
            for (g, pi) in gain.iter_mut().zip(p.chunks_exact(r)) {
                *g = pi[0] / f;
            }
        }
    }
    a.truncate(r);
    Filtered {
        v: v_out,
        f: f_out,
        a_next: a,
        p_next: Matrix::from_vec(r, r, p).expect("square buffer"),
        exact_init,
    }
}

/// Exact Gaussian log-likelihood of a zero-mean ARMA series with the given
/// expanded AR (`1 − Σ`) and MA (`1 + Σ`) coefficients and innovation variance.
pub fn arma_log_likelihood(y: &[f64], ar: &[f64], ma: &[f64], sigma2: f64) -> f64 {
    kalman_filter(&Arma::new(ar, ma), y).log_likelihood(sigma2)
}
