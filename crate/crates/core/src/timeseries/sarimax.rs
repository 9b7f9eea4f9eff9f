//! Seasonal ARIMA with exogenous regressors.
//!
//! The series is differenced up front, `w_t = δ(L) y_t`, and the
//! regression-adjusted `w_t − μ − x̃_t·β` (with `x̃ = δ(L) x`) is modelled as a
//! stationary multiplicative ARMA. The mean `μ` is only present when no
//! differencing is applied. Parameters are estimated by maximizing the
//! Kalman-filter likelihood with σ² concentrated out.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::inference::distributions::normal_quantile;
use crate::numerics::{least_squares, nelder_mead, Matrix, NelderMeadOptions};

use super::state_space::{expand_polynomials, kalman_filter, pacf_to_coefficients, Arma, Filtered};
use super::{TimeSeries, TsError};

pub const SEASONAL_PERIOD: usize = 12;
const MAX_TOTAL_DIFFERENCING: usize = 2;
/// Simplex stopping rule: coefficients settle well below their sampling
/// error long before 1e-4 and the log-likelihood is flat to 1e-6.
const FIT_OPTIONS: NelderMeadOptions = NelderMeadOptions {
    max_evaluations: 2000,
    x_tol: 1e-4,
    f_tol: 1e-6,
};

/// Model orders `(p,d,q)×(P,D,Q,s)` plus exogenous series names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SarimaxSpec {
    pub order: (usize, usize, usize),
    pub seasonal: (usize, usize, usize, usize),
    pub exogenous: Vec<String>,
}

impl SarimaxSpec {
    pub fn new(order: (usize, usize, usize), seasonal: (usize, usize, usize)) -> Self {
        Self {
            order,
            seasonal: (seasonal.0, seasonal.1, seasonal.2, SEASONAL_PERIOD),
            exogenous: Vec::new(),
        }
    }

    pub fn with_exogenous<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.exogenous = names.into_iter().map(Into::into).collect();
        self
    }

    /// `(p,d,q,P,D,Q)`, the tie-break key of the grid search.
    pub fn key(&self) -> [usize; 6] {
        let (p, d, q) = self.order;
        let (sp, sd, sq, _) = self.seasonal;
        [p, d, q, sp, sd, sq]
    }

    pub fn arma_order(&self) -> usize {
        let [p, _, q, sp, _, sq] = self.key();
        p + q + sp + sq
    }

    /// Observations lost to differencing.
    pub fn differencing_loss(&self) -> usize {
        self.order.1 + self.seasonal.3 * self.seasonal.1
    }

    pub fn has_mean(&self) -> bool {
        self.order.1 + self.seasonal.1 == 0
    }

    pub fn validate(&self) -> Result<(), TsError> {
        let s = self.seasonal.3;
        if s < 2 {
            return Err(TsError::InvalidSpec(format!("seasonal period {s} < 2")));
        }
        if self.order.1 + self.seasonal.1 > MAX_TOTAL_DIFFERENCING {
            return Err(TsError::InvalidSpec(format!(
                "total differencing d + D = {} exceeds {MAX_TOTAL_DIFFERENCING}",
                self.order.1 + self.seasonal.1
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.exogenous.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(TsError::InvalidSpec(format!("exogenous {dup:?} listed twice")));
        }
        Ok(())
    }
}

impl fmt::Display for SarimaxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, d, q) = self.order;
        let (sp, sd, sq, s) = self.seasonal;
        write!(f, "SARIMAX({p},{d},{q})x({sp},{sd},{sq},{s})")?;
        if !self.exogenous.is_empty() {
            write!(f, "[{}]", self.exogenous.join(","))?;
        }
        Ok(())
    }
}

/// Coefficients of `(1 − L)^d (1 − L^s)^D`, lowest lag first.
fn differencing_polynomial(d: usize, sd: usize, s: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    let mut mul = |step: usize| {
        let mut next = vec![0.0; poly.len() + step];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + step] -= c;
        }
        poly = next;
    };
    for _ in 0..d {
        mul(1);
    }
    for _ in 0..sd {
        mul(s);
    }
    poly
}

/// Applies `(1 − L)^d (1 − L^s)^D`; the result is `d + s·D` shorter.
pub fn difference(y: &[f64], d: usize, sd: usize, s: usize) -> Vec<f64> {
    let mut out = y.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    for _ in 0..sd {
        out = (s..out.len()).map(|t| out[t] - out[t - s]).collect();
    }
    out
}

/// Inverts [`difference`] given the first `d + s·D` values of the original
/// series.
pub fn integrate(diffed: &[f64], initial: &[f64], d: usize, sd: usize, s: usize) -> Vec<f64> {
    let poly = differencing_polynomial(d, sd, s);
    let m = poly.len() - 1;
    assert_eq!(initial.len(), m, "need {m} initial values");
    let mut y = initial.to_vec();
    y.reserve(diffed.len());
    for (i, &w) in diffed.iter().enumerate() {
        let t = m + i;
        let lagged: f64 = (1..=m).map(|j| -poly[j] * y[t - j]).sum();
        y.push(w + lagged);
    }
    y
}

/// Estimated model.
#[derive(Debug, Clone, Serialize)]
pub struct SarimaxFit {
    pub spec: SarimaxSpec,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub mean: Option<f64>,
    pub exogenous_coefficients: Vec<(String, f64)>,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub hqic: f64,
    /// Estimated parameters including σ².
    pub k: usize,
    /// Observations entering the likelihood.
    pub n_obs: usize,
    /// Leading observations the likelihood is conditioned on: the
    /// differencing loss, or more when fitted on a common sample.
    pub conditioned_on: usize,
    /// One-step prediction errors of the differenced series.
    pub residuals: Vec<f64>,
    pub standardized_residuals: Vec<f64>,
    pub converged: bool,
    pub evaluations: usize,
    /// False when the stationary state covariance was unavailable and the
    /// diffuse prior was used instead.
    pub exact_initialization: bool,
    #[serde(skip)]
    state: ForecastState,
}

#[derive(Debug, Clone, Default)]
struct ForecastState {
    y: Vec<f64>,
    exog: Vec<Vec<f64>>,
    ar_full: Vec<f64>,
    ma_full: Vec<f64>,
    a_next: Vec<f64>,
    p_next: Option<Matrix>,
}

impl SarimaxFit {
    /// Information criteria from a log-likelihood, parameter count and sample size.
    pub fn criteria(log_likelihood: f64, k: usize, n: usize) -> (f64, f64, f64) {
        let (k, n) = (k as f64, n as f64);
        (
            2.0 * k - 2.0 * log_likelihood,
            k * n.ln() - 2.0 * log_likelihood,
            2.0 * k * n.ln().ln() - 2.0 * log_likelihood,
        )
    }
}

fn sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

struct Problem<'a> {
    spec: &'a SarimaxSpec,
    w: Vec<f64>,
    /// Regressors on the differenced scale, intercept first when present.
    xd: Matrix,
}

struct Unpacked {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sar: Vec<f64>,
    sma: Vec<f64>,
    beta: Vec<f64>,
}

impl Problem<'_> {
    fn unpack(&self, theta: &[f64]) -> Unpacked {
        let [p, _, q, sp, _, sq] = self.spec.key();
        let mut at = 0;
        let mut take = |len: usize| {
            let s = &theta[at..at + len];
            at += len;
            s
        };
        let ar = pacf_to_coefficients(take(p));
        let ma = pacf_to_coefficients(take(q)).iter().map(|v| -v).collect();
        let sar = pacf_to_coefficients(take(sp));
        let sma = pacf_to_coefficients(take(sq)).iter().map(|v| -v).collect();
        let beta = take(self.xd.cols()).to_vec();
        Unpacked { ar, ma, sar, sma, beta }
    }

    fn filter(&self, u: &Unpacked) -> (Filtered, Vec<f64>, Vec<f64>) {
        let (ar_full, ma_full) = expand_polynomials(&u.ar, &u.sar, &u.ma, &u.sma, self.spec.seasonal.3);
        let adjusted: Vec<f64> = if u.beta.is_empty() {
            self.w.clone()
        } else {
            let fitted = self.xd.matvec(&u.beta).expect("width checked");
            self.w.iter().zip(&fitted).map(|(a, b)| a - b).collect()
        };
        (kalman_filter(&Arma::new(&ar_full, &ma_full), &adjusted), ar_full, ma_full)
    }
}

/// Fits `spec` to `series`, pulling exogenous columns from the series by name.
/// The likelihood covers every observation that survives differencing.
pub fn sarimax_fit(series: &TimeSeries, spec: &SarimaxSpec) -> Result<SarimaxFit, TsError> {
    sarimax_fit_conditional(series, spec, 0)
}

/// Like [`sarimax_fit`], but the likelihood is that of observations
/// `condition_on..n` given the earlier ones (or the differencing loss, if
/// larger). Fits sharing `condition_on` are scored on the same data.
pub fn sarimax_fit_conditional(
    series: &TimeSeries,
    spec: &SarimaxSpec,
    condition_on: usize,
) -> Result<SarimaxFit, TsError> {
    let exog = spec
        .exogenous
        .iter()
        .map(|name| series.exogenous(name).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>, _>>()?;
    fit_arrays(&series.values, exog, spec, condition_on)
}

fn fit_arrays(
    y: &[f64],
    exog: Vec<Vec<f64>>,
    spec: &SarimaxSpec,
    condition_on: usize,
) -> Result<SarimaxFit, TsError> {
    spec.validate()?;
    let (_, d, _) = spec.order;
    let (_, sd_ord, _, s) = spec.seasonal;
    let loss = spec.differencing_loss();
    let burn = condition_on.max(loss);
    // innovations of the differenced series left out of the likelihood
    let skip = burn - loss;
    let n_reg = exog.len() + usize::from(spec.has_mean());
    let n_params = spec.arma_order() + n_reg + 1;
    let needed = burn + n_params + 2;
    if y.len() < needed {
        return Err(TsError::TooShort { needed, got: y.len() });
    }
    for col in &exog {
        if col.len() != y.len() {
            return Err(TsError::InvalidSpec(format!(
                "exogenous length {} differs from series length {}",
                col.len(),
                y.len()
            )));
        }
    }
    let w = difference(y, d, sd_ord, s);
    let n_diff = w.len();
    let n_obs = n_diff - skip;
    let sd_w = sd(&w[skip..]);
    if !(sd_w > 0.0) {
        return Err(TsError::ZeroVariance);
    }
    let mut xd = Matrix::zeros(n_diff, n_reg);
    let mut col = 0;
    if spec.has_mean() {
        (0..n_diff).for_each(|t| xd[(t, 0)] = 1.0);
        col = 1;
    }
    for x in &exog {
        for (t, v) in difference(x, d, sd_ord, s).into_iter().enumerate() {
            xd[(t, col)] = v;
        }
        col += 1;
    }
    // OLS on the likelihood rows: exact when there are no ARMA terms, a
    // starting point otherwise
    let beta0 = if n_reg > 0 {
        let rows: Vec<usize> = (skip..n_diff).collect();
        least_squares(&xd.select_rows(&rows), &w[skip..])?
    } else {
        Vec::new()
    };

    let problem = Problem { spec, w, xd };
    let n_arma = spec.arma_order();
    let mut x0 = vec![0.0; n_arma];
    x0.extend_from_slice(&beta0);
    let mut step = vec![0.1; n_arma];
    for j in 0..n_reg {
        let s_x = sd(&problem.xd.column(j)[skip..]);
        step.push(if s_x > 0.0 { 0.1 * sd_w / s_x } else { 0.1 * sd_w });
    }

    let (theta, converged, evaluations) = if n_arma == 0 {
        // regression-only: OLS maximizes the likelihood exactly
        (x0, true, 1)
    } else {
        let m = nelder_mead(
            |theta| {
                let (f, _, _) = problem.filter(&problem.unpack(theta));
                -f.concentrated_log_likelihood(skip)
            },
            &x0,
            &step,
            FIT_OPTIONS,
        );
        (m.x, m.converged, m.evaluations)
    };

    let u = problem.unpack(&theta);
    let (filtered, ar_full, ma_full) = problem.filter(&u);
    let sigma2 = filtered.sigma2_hat(skip);
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(TsError::ZeroVariance);
    }
    let log_likelihood = filtered.concentrated_log_likelihood(skip);
    let k = n_params;
    let (aic, bic, hqic) = SarimaxFit::criteria(log_likelihood, k, n_obs);
    let standardized_residuals = filtered
        .v
        .iter()
        .zip(&filtered.f)
        .map(|(v, f)| v / (sigma2 * f).sqrt())
        .collect();
    let (mean, exog_beta) = if spec.has_mean() {
        (Some(u.beta[0]), &u.beta[1..])
    } else {
        (None, &u.beta[..])
    };
    Ok(SarimaxFit {
        spec: spec.clone(),
        mean,
        exogenous_coefficients: spec.exogenous.iter().cloned().zip(exog_beta.iter().copied()).collect(),
        ar: u.ar,
        ma: u.ma,
        seasonal_ar: u.sar,
        seasonal_ma: u.sma,
        sigma2,
        log_likelihood,
        aic,
        bic,
        hqic,
        k,
        n_obs,
        conditioned_on: burn,
        residuals: filtered.v.clone(),
        standardized_residuals,
        converged,
        evaluations,
        exact_initialization: filtered.exact_init,
        state: ForecastState {
            y: y.to_vec(),
            exog,
            ar_full,
            ma_full,
            a_next: filtered.a_next,
            p_next: Some(filtered.p_next),
        },
    })
}

/// Every `(p,d,q)×(P,D,Q,12)` with orders in {0, 1}, in lexicographic order.
pub fn default_grid() -> Vec<SarimaxSpec> {
    (0..64usize)
        .map(|bits| {
            let b = |i: usize| (bits >> (5 - i)) & 1;
            SarimaxSpec::new((b(0), b(1), b(2)), (b(3), b(4), b(5)))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCandidate {
    pub spec: SarimaxSpec,
    pub aic: Option<f64>,
    pub evaluations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSearch {
    pub best: SarimaxFit,
    pub candidates: Vec<GridCandidate>,
}

/// Fits every spec and keeps the lowest AIC; exact ties go to the
/// lexicographically smallest `(p,d,q,P,D,Q)`.
///
/// Differencing consumes leading observations, so likelihoods of specs with
/// different `d + s·D` would cover different data. Every candidate is
/// therefore conditioned on the largest differencing loss in the grid and
/// scored on the same observations.
pub fn sarimax_grid_search(series: &TimeSeries, grid: &[SarimaxSpec]) -> Result<GridSearch, TsError> {
    if grid.is_empty() {
        return Err(TsError::InvalidSpec("empty grid".into()));
    }
    let common = grid
        .iter()
        .filter(|s| s.validate().is_ok())
        .map(SarimaxSpec::differencing_loss)
        .max()
        .unwrap_or(0);
    let fits: Vec<Result<SarimaxFit, TsError>> = grid
        .par_iter()
        .map(|s| sarimax_fit_conditional(series, s, common))
        .collect();
    let candidates = grid
        .iter()
        .zip(&fits)
        .map(|(spec, r)| GridCandidate {
            spec: spec.clone(),
            aic: r.as_ref().ok().map(|f| f.aic),
            evaluations: r.as_ref().ok().map(|f| f.evaluations),
            error: r.as_ref().err().map(ToString::to_string),
        })
        .collect();
    let best = fits
        .into_iter()
        .flatten()
        .filter(|f| f.aic.is_finite())
        .min_by(|a, b| a.aic.total_cmp(&b.aic).then_with(|| a.spec.key().cmp(&b.spec.key())))
        .ok_or(TsError::AllFitsFailed)?;
    Ok(GridSearch { best, candidates })
}

/// Point forecasts with a symmetric Gaussian interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Forecast {
    pub level: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub variance: Vec<f64>,
}

/// 95% forecast.
pub fn forecast(
    fit: &SarimaxFit,
    horizon: usize,
    future_exogenous: &BTreeMap<String, Vec<f64>>,
) -> Result<Forecast, TsError> {
    forecast_with_level(fit, horizon, future_exogenous, 0.95)
}

/// Forecast from the end of the sample. The state is augmented with the last
/// `d + s·D` levels so that point and variance come out on the original scale.
pub fn forecast_with_level(
    fit: &SarimaxFit,
    horizon: usize,
    future_exogenous: &BTreeMap<String, Vec<f64>>,
    level: f64,
) -> Result<Forecast, TsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(TsError::InvalidSpec(format!("interval level {level} outside (0, 1)")));
    }
    let spec = &fit.spec;
    let st = &fit.state;
    let p_next = st
        .p_next
        .as_ref()
        .ok_or_else(|| TsError::InvalidSpec("fit carries no filter state".into()))?;
    let mut future = Vec::with_capacity(spec.exogenous.len());
    for name in &spec.exogenous {
        let v = future_exogenous
            .get(name)
            .ok_or_else(|| TsError::FutureExogenous(format!("missing {name:?}")))?;
        if v.len() < horizon {
            return Err(TsError::FutureExogenous(format!(
                "{name:?} has {} values, horizon is {horizon}",
                v.len()
            )));
        }
        future.push(v[..horizon].to_vec());
    }
    if horizon == 0 {
        return Ok(Forecast {
            level,
            point: vec![],
            lower: vec![],
            upper: vec![],
            variance: vec![],
        });
    }

    let (_, d, _) = spec.order;
    let (_, sd_ord, _, s) = spec.seasonal;
    let delta = differencing_polynomial(d, sd_ord, s);
    let m = delta.len() - 1;
    let n = st.y.len();

    // regression contribution on the differenced scale for each future step
    let beta: Vec<f64> = fit.exogenous_coefficients.iter().map(|(_, b)| *b).collect();
    let reg: Vec<f64> = (0..horizon)
        .map(|h| {
            let mut r = fit.mean.unwrap_or(0.0);
            for (j, b) in beta.iter().enumerate() {
                let x = |t: usize| if t < n { st.exog[j][t] } else { future[j][t - n] };
                let t = n + h;
                let xd: f64 = (0..=m).map(|i| delta[i] * x(t - i)).sum();
                r += b * xd;
            }
            r
        })
        .collect();

    let arma = Arma::new(&st.ar_full, &st.ma_full);
    let r = arma.dim();
    let dim = r + m;
    // z = [α; y_{t−1}, …, y_{t−m}],  y_t = α_0 + reg_t − Σ δ_i y_{t−i}
    let mut a = Matrix::zeros(dim, dim);
    let t_mat = arma.transition();
    for i in 0..r {
        for j in 0..r {
            a[(i, j)] = t_mat[(i, j)];
        }
    }
    let mut obs = vec![0.0; dim];
    obs[0] = 1.0;
    for i in 1..=m {
        obs[r + i - 1] = -delta[i];
    }
    if m > 0 {
        for (j, &o) in obs.iter().enumerate() {
            a[(r, j)] = o;
        }
        for i in 1..m {
            a[(r + i, r + i - 1)] = 1.0;
        }
    }
    let mut rr = Matrix::zeros(dim, dim);
    for i in 0..r {
        for j in 0..r {
            rr[(i, j)] = arma.r_vec[i] * arma.r_vec[j];
        }
    }

    let mut z = vec![0.0; dim];
    z[..r].copy_from_slice(&st.a_next);
    for i in 1..=m {
        z[r + i - 1] = st.y[n - i];
    }
    let mut p = Matrix::zeros(dim, dim);
    for i in 0..r {
        for j in 0..r {
            p[(i, j)] = p_next[(i, j)];
        }
    }

    let zq = normal_quantile(0.5 + level / 2.0);
    let mut out = Forecast {
        level,
        point: Vec::with_capacity(horizon),
        lower: Vec::with_capacity(horizon),
        upper: Vec::with_capacity(horizon),
        variance: Vec::with_capacity(horizon),
    };
    for h in 0..horizon {
        let point: f64 = obs.iter().zip(&z).map(|(o, v)| o * v).sum::<f64>() + reg[h];
        let po = p.matvec(&obs)?;
        let var = fit.sigma2 * obs.iter().zip(&po).map(|(o, v)| o * v).sum::<f64>().max(0.0);
        let half = zq * var.sqrt();
        out.point.push(point);
        out.lower.push(point - half);
        out.upper.push(point + half);
        out.variance.push(var);
        // advance: the lag slot receives y_t = obs·z + reg_t
        let mut next = a.matvec(&z)?;
        if m > 0 {
            next[r] += reg[h];
        }
        z = next;
        p = a.matmul(&p)?.matmul(&a.transpose())?;
        for i in 0..r {
            for j in 0..r {
                p[(i, j)] += rr[(i, j)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) fn fit_values(y: &[f64], spec: &SarimaxSpec) -> Result<SarimaxFit, TsError> {
    fit_arrays(y, Vec::new(), spec, 0)
}
