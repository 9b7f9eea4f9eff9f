use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::linear::{LinearFit, LogisticFit};
use crate::numerics::{dot, least_squares, mean, Matrix};

use super::distributions::{chi2_sf, f_sf};
use super::{Df, InferenceError, StatTestResult};

pub const REASON_NON_NORMAL: &str = "non-normal residuals";
pub const REASON_LM_AUTOCORRELATION: &str = "serial correlation in residuals";
pub const REASON_INSIGNIFICANT: &str = "overall regression insignificant";
pub const REASON_AUTOCORRELATION: &str = "autocorrelation";

/// `1 − R²` below this is treated as an exact fit.
const EXACT_FIT_TOL: f64 = 1e-12;
/// Gram-Schmidt drops a column whose residual norm falls below this fraction of its norm.
const COLLINEAR_TOL: f64 = 1e-10;

fn centered(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    v.iter().map(|x| x - m).collect()
}

/// `1 − SSE/SST`.
pub fn r_squared(y: &[f64], fitted: &[f64]) -> Result<f64, InferenceError> {
    if y.len() != fitted.len() {
        return Err(InferenceError::LengthMismatch {
            left: y.len(),
            right: fitted.len(),
        });
    }
    if y.is_empty() {
        return Err(InferenceError::Empty);
    }
    let yc = centered(y);
    let sst = dot(&yc, &yc);
    if sst == 0.0 {
        return Err(InferenceError::ZeroVariance);
    }
    let sse: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - sse / sst)
}

pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> f64 {
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0)
}

/// R² of regressing `y` on `columns` plus an intercept, tolerating exact
/// collinearity among the columns (redundant ones are skipped).
fn projection_r2(y: &[f64], columns: &[Vec<f64>]) -> Option<f64> {
    let mut r = centered(y);
    let sst = dot(&r, &r);
    if sst == 0.0 {
        return None;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let mut q = centered(col);
        let norm0 = dot(&q, &q).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&q, b);
                q.iter_mut().zip(b).for_each(|(v, w)| *v -= c * w);
            }
        }
        let norm = dot(&q, &q).sqrt();
        if norm <= COLLINEAR_TOL * norm0 {
            continue;
        }
        q.iter_mut().for_each(|v| *v /= norm);
        basis.push(q);
    }
    for b in &basis {
        let c = dot(&r, b);
        r.iter_mut().zip(b).for_each(|(v, w)| *v -= c * w);
    }
    Some(1.0 - dot(&r, &r) / sst)
}

/// Variance inflation factors; exactly collinear columns get `+∞`.
pub fn vif(x: &DesignMatrix) -> Result<Vec<(String, f64)>, InferenceError> {
    let p = x.n_cols();
    if p < 2 {
        return Err(InferenceError::TooFewColumns { needed: 2, got: p });
    }
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.values.column(j)).collect();
    Ok((0..p)
        .map(|j| {
            let others: Vec<Vec<f64>> = (0..p)
                .filter(|&k| k != j)
                .map(|k| cols[k].clone())
                .collect();
            let v = match projection_r2(&cols[j], &others) {
                Some(r2) if 1.0 - r2 > EXACT_FIT_TOL => 1.0 / (1.0 - r2),
                // constant columns are collinear with the intercept
                _ => f64::INFINITY,
            };
            (x.column_names[j].clone(), v)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateScore {
    pub name: String,
    /// Squared Pearson correlation with the target.
    pub r2: f64,
    /// Set when the column is constant (score forced to 0).
    pub constant: bool,
}

pub fn univariate_r2(x: &DesignMatrix) -> Result<Vec<UnivariateScore>, InferenceError> {
    let yc = centered(&x.target);
    let syy = dot(&yc, &yc);
    if syy == 0.0 {
        return Err(InferenceError::ZeroVariance);
    }
    Ok((0..x.n_cols())
        .map(|j| {
            let xc = centered(&x.values.column(j));
            let sxx = dot(&xc, &xc);
            let (r2, constant) = if sxx == 0.0 {
                (0.0, true)
            } else {
                let sxy = dot(&xc, &yc);
                ((sxy * sxy / (sxx * syy)).min(1.0), false)
            };
            UnivariateScore {
                name: x.column_names[j].clone(),
                r2,
                constant,
            }
        })
        .collect())
}

/// Highest score; ties go to the lexicographically smallest name.
pub fn select_best_univariate(scores: &[UnivariateScore]) -> Option<&UnivariateScore> {
    scores
        .iter()
        .filter(|s| !s.constant)
        .min_by(|a, b| b.r2.total_cmp(&a.r2).then_with(|| a.name.cmp(&b.name)))
}

pub fn durbin_watson(residuals: &[f64]) -> Result<StatTestResult, InferenceError> {
    let n = residuals.len();
    if n < 2 {
        return Err(InferenceError::TooFewObservations { needed: 2, got: n });
    }
    let sse = dot(residuals, residuals);
    if sse == 0.0 {
        return Err(InferenceError::ZeroVariance);
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(StatTestResult::statistic_only(
        "durbin_watson",
        (num / sse).clamp(0.0, 4.0),
    ))
}

/// Moment-based sample skewness and kurtosis (not excess).
pub fn skew_kurtosis(x: &[f64]) -> Result<(f64, f64), InferenceError> {
    let n = x.len();
    if n < 2 {
        return Err(InferenceError::TooFewObservations { needed: 2, got: n });
    }
    let c = centered(x);
    let nf = n as f64;
    let m2 = c.iter().map(|v| v * v).sum::<f64>() / nf;
    if m2 == 0.0 {
        return Err(InferenceError::ZeroVariance);
    }
    let m3 = c.iter().map(|v| v.powi(3)).sum::<f64>() / nf;
    let m4 = c.iter().map(|v| v.powi(4)).sum::<f64>() / nf;
    Ok((m3 / m2.powf(1.5), m4 / (m2 * m2)))
}

pub fn jarque_bera(residuals: &[f64]) -> Result<StatTestResult, InferenceError> {
    let (s, k) = skew_kurtosis(residuals)?;
    let jb = residuals.len() as f64 / 6.0 * (s * s + (k - 3.0).powi(2) / 4.0);
    Ok(StatTestResult::with_p_value(
        "jarque_bera",
        jb,
        chi2_sf(jb, 2.0),
        Df::One(2.0),
    ))
}

/// Breusch-Godfrey LM test. `x` holds the original regressors without the
/// intercept column, which the auxiliary regression adds itself.
pub fn breusch_godfrey(
    residuals: &[f64],
    x: &Matrix,
    lags: usize,
) -> Result<StatTestResult, InferenceError> {
    let n = residuals.len();
    if x.rows() != n {
        return Err(InferenceError::LengthMismatch {
            left: n,
            right: x.rows(),
        });
    }
    let needed = x.cols() + lags + 2;
    if n < needed || lags == 0 {
        return Err(InferenceError::TooFewObservations { needed, got: n });
    }
    let name = "breusch_godfrey";
    let ec = centered(residuals);
    let sst = dot(&ec, &ec);
    if sst == 0.0 {
        return Ok(StatTestResult::with_p_value(
            name,
            0.0,
            1.0,
            Df::One(lags as f64),
        ));
    }
    let mut lagged = Matrix::zeros(n, lags);
    for t in 0..n {
        for l in 1..=lags.min(t) {
            lagged[(t, l - 1)] = residuals[t - l];
        }
    }
    let aux = x.hstack(&lagged)?.with_intercept();
    let beta = least_squares(&aux, residuals)?;
    let fitted = aux.matvec(&beta)?;
    let ssr: f64 = residuals
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let lm = n as f64 * (1.0 - ssr / sst).max(0.0);
    Ok(StatTestResult::with_p_value(
        name,
        lm,
        chi2_sf(lm, lags as f64),
        Df::One(lags as f64),
    ))
}

/// Overall F test from R² with `p` regressors; an exact fit gives `+∞`.
pub fn f_test_from_r2(r2: f64, n: usize, p: usize) -> Result<StatTestResult, InferenceError> {
    if p == 0 {
        return Err(InferenceError::TooFewColumns { needed: 1, got: 0 });
    }
    if n <= p + 1 {
        return Err(InferenceError::TooFewObservations {
            needed: p + 2,
            got: n,
        });
    }
    let (d1, d2) = (p as f64, (n - p - 1) as f64);
    let df = Df::Two(d1, d2);
    if 1.0 - r2 <= EXACT_FIT_TOL {
        return Ok(StatTestResult::with_p_value(
            "f_statistic",
            f64::INFINITY,
            0.0,
            df,
        ));
    }
    let f = (r2 / d1) / ((1.0 - r2) / d2);
    Ok(StatTestResult::with_p_value(
        "f_statistic",
        f,
        f_sf(f, d1, d2),
        df,
    ))
}

pub fn f_statistic(fit: &LinearFit, x: &DesignMatrix) -> Result<StatTestResult, InferenceError> {
    let fitted = fit.predict(x).map_err(|_| InferenceError::LengthMismatch {
        left: fit.names.len(),
        right: x.n_cols(),
    })?;
    let r2 = r_squared(&x.target, &fitted)?;
    f_test_from_r2(r2, x.n_rows(), fit.coefficients.len())
}

/// Per-coefficient Wald chi-square tests, constant first.
pub fn wald_test(fit: &LogisticFit) -> Result<Vec<StatTestResult>, InferenceError> {
    if !fit.converged {
        return Err(InferenceError::Unconverged);
    }
    let rows = std::iter::once(("const", fit.intercept, fit.intercept_se)).chain(
        fit.names
            .iter()
            .zip(&fit.coefficients)
            .zip(&fit.standard_errors)
            .map(|((n, &b), &se)| (n.as_str(), b, se)),
    );
    Ok(rows
        .map(|(name, b, se)| {
            if se > 0.0 && se.is_finite() {
                let w = (b / se).powi(2);
                StatTestResult::with_p_value(name, w, chi2_sf(w, 1.0), Df::One(1.0))
            } else {
                StatTestResult::statistic_only(name, f64::NAN)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub valid: bool,
    pub reasons: Vec<String>,
}

/// Fit statistics and residual diagnostics for one regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub model: String,
    pub n: usize,
    pub p: usize,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub f_statistic: Option<StatTestResult>,
    pub durbin_watson: Option<StatTestResult>,
    pub jarque_bera: Option<StatTestResult>,
    pub lagrange_multiplier: Option<StatTestResult>,
    pub accuracy: f64,
    pub validity: Validity,
}

/// Builds the full report for a fitted linear model on its training design.
/// Rows of `train` are taken to be in time order for the serial-correlation tests.
pub fn regression_report(
    model: &str,
    fit: &LinearFit,
    train: &DesignMatrix,
    accuracy: f64,
    lm_lags: usize,
) -> Result<RegressionReport, InferenceError> {
    let fitted = fit
        .predict(train)
        .map_err(|_| InferenceError::LengthMismatch {
            left: fit.names.len(),
            right: train.n_cols(),
        })?;
    let residuals: Vec<f64> = train
        .target
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();
    let (n, p) = (train.n_rows(), train.n_cols());
    let r2 = r_squared(&train.target, &fitted)?;
    let lags = lm_lags.min(n.saturating_sub(p + 2)).max(1);
    let mut report = RegressionReport {
        model: model.to_string(),
        n,
        p,
        r2,
        adjusted_r2: adjusted_r2(r2, n, p),
        f_statistic: Some(f_test_from_r2(r2, n, p)?),
        durbin_watson: Some(durbin_watson(&residuals)?),
        jarque_bera: Some(jarque_bera(&residuals)?),
        lagrange_multiplier: Some(breusch_godfrey(&residuals, &train.values, lags)?),
        accuracy,
        validity: Validity {
            valid: false,
            reasons: Vec::new(),
        },
    };
    report.validity = regression_validity(&report)?;
    Ok(report)
}

fn p_value_of(t: &Option<StatTestResult>, field: &'static str) -> Result<f64, InferenceError> {
    t.as_ref()
        .and_then(|t| t.p_value)
        .ok_or(InferenceError::MissingField(field))
}

/// Valid iff residuals look normal and serially uncorrelated, the overall F
/// test rejects, and Durbin-Watson lies in [1.5, 2.5].
pub fn regression_validity(report: &RegressionReport) -> Result<Validity, InferenceError> {
    let jb = p_value_of(&report.jarque_bera, "jarque_bera")?;
    let lm = p_value_of(&report.lagrange_multiplier, "lagrange_multiplier")?;
    let f = p_value_of(&report.f_statistic, "f_statistic")?;
    let dw = report
        .durbin_watson
        .as_ref()
        .map(|t| t.statistic)
        .ok_or(InferenceError::MissingField("durbin_watson"))?;
    let mut reasons = Vec::new();
    if jb < 0.05 {
        reasons.push(REASON_NON_NORMAL.to_string());
    }
    if lm < 0.05 {
        reasons.push(REASON_LM_AUTOCORRELATION.to_string());
    }
    if !(f < 0.05) {
        reasons.push(REASON_INSIGNIFICANT.to_string());
    }
    if !(1.5..=2.5).contains(&dw) {
        reasons.push(REASON_AUTOCORRELATION.to_string());
    }
    Ok(Validity {
        valid: reasons.is_empty(),
        reasons,
    })
}
