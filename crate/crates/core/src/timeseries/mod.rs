//! Monthly metascore series: construction, autocorrelation and stationarity
//! diagnostics, classical decomposition, and SARIMAX estimation.

mod sarimax;
mod state_space;

pub use sarimax::{
    default_grid, difference, forecast, forecast_with_level, integrate, sarimax_fit,
    sarimax_fit_conditional, sarimax_grid_search, Forecast,
    GridCandidate, GridSearch, SarimaxFit, SarimaxSpec,
};
pub use state_space::{arma_log_likelihood, expand_polynomials, pacf_to_coefficients};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::data::MovieRecord;
use crate::inference::distributions::{chi2_sf, normal_cdf, normal_quantile};
use crate::inference::{Df, StatTestResult};
use crate::numerics::{least_squares, Matrix, NumericsError};

#[derive(Debug, Error)]
pub enum TsError {
    #[error("no records carry both a publication date and a metascore")]
    NoRecords,
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series too short: need {needed} observations, have {got}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("unknown exogenous series {0:?}")]
    UnknownExogenous(String),
    #[error("future exogenous values: {0}")]
    FutureExogenous(String),
    #[error("every candidate fit failed")]
    AllFitsFailed,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("could not write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Self { year, month }
    }

    pub fn of(date: chrono::NaiveDate) -> Self {
        Self::new(date.year(), date.month())
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            Self::new(self.year + 1, 1)
        } else {
            Self::new(self.year, self.month + 1)
        }
    }

    /// Months from `self` to `later`.
    pub fn months_until(self, later: YearMonth) -> i64 {
        (later.year as i64 - self.year as i64) * 12 + later.month as i64 - self.month as i64
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (y, m) = s.split_once('-').ok_or_else(|| format!("bad month {s:?}"))?;
        let year = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
        if !(1..=12).contains(&month) {
            return Err(format!("bad month in {s:?}"));
        }
        Ok(Self { year, month })
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Gap-free monthly series with optional aligned exogenous series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub months: Vec<YearMonth>,
    pub values: Vec<f64>,
    /// Set for months that had no observations and were interpolated.
    pub interpolated: Vec<bool>,
    pub exogenous: BTreeMap<String, Vec<f64>>,
}

pub const EXOG_MEAN_DURATION: &str = "mean_duration";
pub const EXOG_MOVIE_COUNT: &str = "movie_count";

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn exogenous(&self, name: &str) -> Result<&[f64], TsError> {
        self.exogenous
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| TsError::UnknownExogenous(name.to_string()))
    }

    /// Series without exogenous inputs starting at `start`.
    pub fn from_values(start: YearMonth, values: Vec<f64>) -> Self {
        let mut months = Vec::with_capacity(values.len());
        let mut m = start;
        for _ in 0..values.len() {
            months.push(m);
            m = m.succ();
        }
        Self {
            interpolated: vec![false; values.len()],
            months,
            values,
            exogenous: BTreeMap::new(),
        }
    }

    /// Months following the last observation.
    pub fn future_months(&self, horizon: usize) -> Vec<YearMonth> {
        let mut out = Vec::with_capacity(horizon);
        let mut m = *self.months.last().expect("non-empty series");
        for _ in 0..horizon {
            m = m.succ();
            out.push(m);
        }
        out
    }

    /// Two-column CSV (month, value).
    pub fn write_csv(&self, path: &Path) -> Result<(), TsError> {
        let io = |source| TsError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
        w.write_record(["month", "value"]).map_err(|e| io(e.into()))?;
        for (m, v) in self.months.iter().zip(&self.values) {
            w.write_record([m.to_string(), v.to_string()])
                .map_err(|e| io(e.into()))?;
        }
        w.flush().map_err(io)
    }
}

fn interpolate_gaps(values: &mut [Option<f64>]) {
    let known: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    for pair in known.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (va, vb) = (values[a].unwrap(), values[b].unwrap());
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            values[i] = Some(va + t * (vb - va));
        }
    }
}

/// Mean metascore per publication month, with empty months linearly
/// interpolated and flagged. Exogenous series: mean duration (interpolated
/// like the target) and movie count (zero in empty months).
pub fn aggregate_monthly(records: &[MovieRecord]) -> Result<TimeSeries, TsError> {
    let mut buckets: BTreeMap<YearMonth, (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        if let Some(score) = r.metascore {
            let e = buckets.entry(YearMonth::of(r.date_published)).or_default();
            e.0 += score as f64;
            e.1 += r.duration as f64;
            e.2 += 1;
        }
    }
    let (&first, _) = buckets.first_key_value().ok_or(TsError::NoRecords)?;
    let (&last, _) = buckets.last_key_value().expect("non-empty");
    let len = first.months_until(last) as usize + 1;
    let mut months = Vec::with_capacity(len);
    let mut values = vec![None; len];
    let mut durations = vec![None; len];
    let mut counts = vec![0.0; len];
    let mut m = first;
    for i in 0..len {
        months.push(m);
        if let Some(&(sum, dur, n)) = buckets.get(&m) {
            values[i] = Some(sum / n as f64);
            durations[i] = Some(dur / n as f64);
            counts[i] = n as f64;
        }
        m = m.succ();
    }
    let interpolated = values.iter().map(Option::is_none).collect();
    interpolate_gaps(&mut values);
    interpolate_gaps(&mut durations);
    let mut exogenous = BTreeMap::new();
    exogenous.insert(
        EXOG_MEAN_DURATION.to_string(),
        durations.into_iter().map(Option::unwrap).collect(),
    );
    exogenous.insert(EXOG_MOVIE_COUNT.to_string(), counts);
    Ok(TimeSeries {
        months,
        values: values.into_iter().map(Option::unwrap).collect(),
        interpolated,
        exogenous,
    })
}

/// Sample autocorrelations `ρ̂_0..=ρ̂_nlags` with the biased (1/n) estimator.
pub fn acf(x: &[f64], nlags: usize) -> Result<Vec<f64>, TsError> {
    let n = x.len();
    if nlags >= n {
        return Err(TsError::TooShort {
            needed: nlags + 1,
            got: n,
        });
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return Err(TsError::ZeroVariance);
    }
    Ok((0..=nlags)
        .map(|k| c[k..].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Partial autocorrelations via the Durbin-Levinson recursion; entry 0 is 1.
pub fn pacf(x: &[f64], nlags: usize) -> Result<Vec<f64>, TsError> {
    let rho = acf(x, nlags)?;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for k in 1..=nlags {
        let num = rho[k] - (1..k).map(|j| phi[j - 1] * rho[k - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let mut next = vec![0.0; k];
        for j in 1..k {
            next[j - 1] = phi[j - 1] - a * phi[k - j - 1];
        }
        next[k - 1] = a;
        phi = next;
        v *= 1.0 - a * a;
        out.push(a);
    }
    Ok(out)
}

/// Ljung-Box portmanteau test on the first `lags` autocorrelations.
pub fn ljung_box(residuals: &[f64], lags: usize) -> Result<StatTestResult, TsError> {
    let n = residuals.len();
    if lags == 0 || n <= lags {
        return Err(TsError::TooShort {
            needed: lags + 1,
            got: n,
        });
    }
    let rho = acf(residuals, lags)?;
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * (1..=lags)
            .map(|k| rho[k] * rho[k] / (nf - k as f64))
            .sum::<f64>();
    Ok(StatTestResult::with_p_value(
        "ljung_box",
        q,
        chi2_sf(q, lags as f64),
        Df::One(lags as f64),
    ))
}

/// Tabulated constant-only Dickey-Fuller critical values (level, value).
pub const ADF_CRITICAL_VALUES: [(f64, f64); 3] = [(0.01, -3.43), (0.05, -2.86), (0.10, -2.57)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub test: StatTestResult,
    pub lags: usize,
    pub n_obs: usize,
    /// True when the statistic is below the 5% critical value.
    pub stationary: bool,
}

/// P-value for an ADF statistic by piecewise-linear interpolation of the
/// tabulated critical values in normal-quantile space, extrapolating the
/// end segments.
pub fn adf_p_value(stat: f64) -> f64 {
    let pts: Vec<(f64, f64)> = ADF_CRITICAL_VALUES
        .iter()
        .map(|&(p, c)| (c, normal_quantile(p)))
        .collect();
    let seg = if stat < pts[1].0 { 0 } else { 1 };
    let (x0, z0) = pts[seg];
    let (x1, z1) = pts[seg + 1];
    let z = z0 + (stat - x0) * (z1 - z0) / (x1 - x0);
    normal_cdf(z).clamp(0.0, 1.0)
}

/// Augmented Dickey-Fuller test with a constant:
/// `Δy_t = α + γ·y_{t−1} + Σ_{i=1..L} δ_i·Δy_{t−i} + e_t`, statistic `γ̂/se(γ̂)`.
pub fn adf_test(series: &[f64], max_lag: Option<usize>) -> Result<AdfResult, TsError> {
    let n = series.len();
    if n < 20 {
        return Err(TsError::TooShort { needed: 20, got: n });
    }
    let lags = max_lag.unwrap_or_else(|| (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize);
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // rows t = lags..dy.len(): Δy_t on y_{t}, Δy_{t-1..t-lags} (dy index t ↔ Δy_{t+1})
    let rows = dy.len().saturating_sub(lags);
    let k = lags + 2;
    if rows < k + 2 {
        return Err(TsError::TooShort {
            needed: lags + k + 3,
            got: n,
        });
    }
    let mut x = Matrix::zeros(rows, k);
    let mut y = Vec::with_capacity(rows);
    for (r, t) in (lags..dy.len()).enumerate() {
        x[(r, 0)] = 1.0;
        x[(r, 1)] = series[t];
        for i in 1..=lags {
            x[(r, 1 + i)] = dy[t - i];
        }
        y.push(dy[t]);
    }
    let beta = least_squares(&x, &y)?;
    let fitted = x.matvec(&beta)?;
    let sse: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let s2 = sse / (rows - k) as f64;
    let xtx_inv = crate::numerics::Cholesky::factor(&x.gram())?.inverse();
    let se = (s2 * xtx_inv[(1, 1)]).sqrt();
    let stat = if se > 0.0 {
        beta[1] / se
    } else {
        f64::NEG_INFINITY
    };
    let p = adf_p_value(stat);
    let test = StatTestResult {
        name: "adf".into(),
        statistic: stat,
        p_value: Some(p),
        df: None,
        reject_at_5pct: Some(p < 0.05),
    };
    Ok(AdfResult {
        test,
        lags,
        n_obs: rows,
        stationary: stat < ADF_CRITICAL_VALUES[1].1,
    })
}

/// Additive classical decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub period: usize,
    /// Centered moving average; `None` within half a period of either end.
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<Option<f64>>,
}

pub fn decompose(series: &[f64], period: usize) -> Result<Decomposition, TsError> {
    let n = series.len();
    if period < 2 || n < 2 * period {
        return Err(TsError::TooShort {
            needed: 2 * period.max(2),
            got: n,
        });
    }
    // 2×m moving average for even m, plain m-term average for odd m
    let half = period / 2;
    let weights: Vec<f64> = if period % 2 == 0 {
        let mut w = vec![1.0 / period as f64; period + 1];
        w[0] /= 2.0;
        w[period] /= 2.0;
        w
    } else {
        vec![1.0 / period as f64; period]
    };
    let mut trend = vec![None; n];
    for t in half..n - half {
        let start = t - half;
        let v: f64 = weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * series[start + i])
            .sum();
        trend[t] = Some(v);
    }
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for t in 0..n {
        if let Some(tr) = trend[t] {
            sums[t % period] += series[t] - tr;
            counts[t % period] += 1;
        }
    }
    let mut pattern: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let centre = pattern.iter().sum::<f64>() / period as f64;
    pattern.iter_mut().for_each(|v| *v -= centre);
    let seasonal: Vec<f64> = (0..n).map(|t| pattern[t % period]).collect();
    let residual = (0..n)
        .map(|t| trend[t].map(|tr| series[t] - tr - seasonal[t]))
        .collect();
    Ok(Decomposition {
        period,
        trend,
        seasonal,
        residual,
    })
}

/// Writes a forecast as CSV (month, point, low, high).
pub fn write_forecast_csv(
    path: &Path,
    months: &[YearMonth],
    fc: &Forecast,
) -> Result<(), TsError> {
    let io = |source| TsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::from("month,point,low,high\n");
    for (i, m) in months.iter().enumerate() {
        out.push_str(&format!(
            "{m},{},{},{}\n",
            fc.point[i], fc.lower[i], fc.upper[i]
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io)
}

#[cfg(test)]
mod tests;
