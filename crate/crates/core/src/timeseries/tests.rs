use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sarimax::fit_values;
use super::*;
use crate::data::tests::record;
use crate::numerics::Cholesky;

fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let e = noise(seed, n + 200);
    let mut y = vec![0.0; n + 200];
    for t in 1..y.len() {
        y[t] = phi * y[t - 1] + e[t];
    }
    y.split_off(200)
}

fn dated(month: u32, day: u32, score: u8) -> crate::data::MovieRecord {
    let mut r = record("m", 2001, &["Drama"], Some(score));
    r.date_published = NaiveDate::from_ymd_opt(2001, month, day).unwrap();
    r
}

#[test]
fn monthly_means_and_gaps() {
    let recs = vec![dated(1, 3, 40), dated(1, 20, 60), dated(3, 1, 60)];
    let ts = aggregate_monthly(&recs).unwrap();
    assert_eq!(ts.values, vec![50.0, 55.0, 60.0]);
    assert_eq!(ts.interpolated, vec![false, true, false]);
    assert_eq!(ts.months[1], YearMonth::new(2001, 2));
    assert_eq!(ts.exogenous(EXOG_MOVIE_COUNT).unwrap(), &[2.0, 0.0, 1.0]);
    assert_eq!(ts.exogenous(EXOG_MEAN_DURATION).unwrap(), &[100.0; 3]);

    let single = aggregate_monthly(&[dated(5, 5, 70)]).unwrap();
    assert_eq!(single.values, vec![70.0]);

    let mut unscored = dated(1, 1, 0);
    unscored.metascore = None;
    assert!(matches!(aggregate_monthly(&[unscored]), Err(TsError::NoRecords)));
}

#[test]
fn year_month_text_round_trip() {
    let m: YearMonth = "1999-12".parse().unwrap();
    assert_eq!(m.succ(), YearMonth::new(2000, 1));
    assert_eq!(m.to_string(), "1999-12");
    assert!("1999-13".parse::<YearMonth>().is_err());
    assert_eq!(YearMonth::new(1999, 11).months_until(YearMonth::new(2001, 2)), 15);
}

#[test]
fn acf_hand_values() {
    let r = acf(&[1.0, -1.0, 1.0, -1.0], 1).unwrap();
    assert_eq!(r[0], 1.0);
    assert!((r[1] + 0.75).abs() < 1e-15);
    assert!(matches!(acf(&[2.0; 5], 1), Err(TsError::ZeroVariance)));
    assert!(acf(&[1.0, 2.0], 2).is_err());
}

#[test]
fn acf_and_pacf_of_ar1() {
    let y = ar1(11, 5000, 0.8);
    let r = acf(&y, 3).unwrap();
    assert!((r[1] - 0.8).abs() < 0.05, "{}", r[1]);
    let p = pacf(&y, 3).unwrap();
    assert!((p[1] - r[1]).abs() < 1e-12);
    assert!(p[2].abs() < 0.05 && p[3].abs() < 0.05);
}

#[test]
fn ljung_box_cases() {
    // every lag-1 product vanishes, so ρ̂_1 = 0 exactly
    let lb = ljung_box(&[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0], 1).unwrap();
    assert!(lb.statistic.abs() < 1e-12);
    assert!((lb.p_value.unwrap() - 1.0).abs() < 1e-12);
    assert!(ljung_box(&[1.0; 20], 10).is_err());

    // nominal acceptance is 95%; 200 replications keep the 90% floor far
    // from sampling noise
    let accepted = (0..200)
        .filter(|&seed| ljung_box(&noise(100 + seed, 500), 10).unwrap().p_value.unwrap() > 0.05)
        .count();
    assert!(accepted >= 180, "{accepted}/200");
}

#[test]
fn adf_separates_noise_from_random_walk() {
    let e = noise(3, 500);
    let stat = adf_test(&e, None).unwrap();
    assert!(stat.test.statistic < -3.0, "{}", stat.test.statistic);
    assert!(stat.stationary);
    assert_eq!(stat.lags, 17);

    let mut walk = vec![0.0; 500];
    let steps = noise(4, 500);
    for t in 1..500 {
        walk[t] = walk[t - 1] + steps[t];
    }
    let stat = adf_test(&walk, None).unwrap();
    assert!(stat.test.statistic > -2.86, "{}", stat.test.statistic);
    assert!(!stat.stationary);
    assert!(adf_test(&e[..19], None).is_err());
}

#[test]
fn adf_p_value_hits_table() {
    for (p, c) in ADF_CRITICAL_VALUES {
        assert!((adf_p_value(c) - p).abs() < 1e-9);
    }
    assert!(adf_p_value(-10.0) < 1e-6);
    assert!(adf_p_value(0.0) > 0.5);
}

#[test]
fn decomposition_of_constant_and_sine() {
    let d = decompose(&[3.0; 36], 12).unwrap();
    assert!(d.trend.iter().flatten().all(|v| (v - 3.0).abs() < 1e-12));
    assert!(d.seasonal.iter().all(|v| v.abs() < 1e-12));
    assert!(d.residual.iter().flatten().all(|v| v.abs() < 1e-12));
    assert_eq!(d.trend.iter().filter(|t| t.is_none()).count(), 12);

    let sine: Vec<f64> = (0..120).map(|t| (2.0 * PI * t as f64 / 12.0).sin()).collect();
    let d = decompose(&sine, 12).unwrap();
    assert!(d.trend.iter().flatten().all(|v| v.abs() < 1e-12));
    for t in 0..120 {
        assert!((d.seasonal[t] - sine[t]).abs() < 1e-12);
    }
    for w in d.seasonal.windows(12) {
        assert!(w.iter().sum::<f64>().abs() < 1e-12);
    }
    assert!(decompose(&sine[..23], 12).is_err());
}

#[test]
fn decomposition_odd_period() {
    let y: Vec<f64> = (0..30).map(|t| t as f64 + [1.0, -2.0, 1.0][t % 3]).collect();
    let d = decompose(&y, 3).unwrap();
    assert_eq!(d.trend[0], None);
    assert!((d.trend[1].unwrap() - 1.0).abs() < 1e-12);
    assert!((d.seasonal[0] - 1.0).abs() < 1e-12);
}

#[test]
fn white_noise_mean_model_matches_iid_likelihood() {
    let y: Vec<f64> = noise(5, 300).iter().map(|e| 2.0 + 1.5 * e).collect();
    let fit = fit_values(&y, &SarimaxSpec::new((0, 0, 0), (0, 0, 0))).unwrap();
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let s2 = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    let direct: f64 = y
        .iter()
        .map(|v| -0.5 * ((2.0 * PI * s2).ln() + (v - m) * (v - m) / s2))
        .sum();
    assert!((fit.log_likelihood - direct).abs() < 1e-6);
    assert!((fit.mean.unwrap() - m).abs() < 1e-10);
    assert_eq!(fit.k, 2);

    let fc = forecast(&fit, 5, &BTreeMap::new()).unwrap();
    assert!(fc.point.iter().all(|p| (p - m).abs() < 1e-10));
    assert!(forecast(&fit, 0, &BTreeMap::new()).unwrap().point.is_empty());
}

#[test]
fn ar1_coefficient_recovered() {
    let y = ar1(7, 2000, 0.7);
    let fit = fit_values(&y, &SarimaxSpec::new((1, 0, 0), (0, 0, 0))).unwrap();
    assert!((fit.ar[0] - 0.7).abs() < 0.05, "{}", fit.ar[0]);
    assert!((fit.sigma2 - 1.0).abs() < 0.1);
    assert!(fit.evaluations <= 2000);
    assert!(fit.converged);
}

#[test]
fn information_criteria_formulas() {
    let y = ar1(8, 200, 0.5);
    let fit = fit_values(&y, &SarimaxSpec::new((1, 1, 1), (0, 0, 0))).unwrap();
    let (k, n, ll) = (fit.k as f64, fit.n_obs as f64, fit.log_likelihood);
    assert_eq!(fit.k, 3);
    assert_eq!(fit.n_obs, 199);
    assert_eq!(fit.aic - (2.0 * k - 2.0 * ll), 0.0);
    assert!((fit.bic - (k * n.ln() - 2.0 * ll)).abs() < 1e-9);
    assert!((fit.hqic - (2.0 * k * n.ln().ln() - 2.0 * ll)).abs() < 1e-9);
}

#[test]
fn spec_validation() {
    assert!(SarimaxSpec::new((0, 2, 0), (0, 1, 0)).validate().is_err());
    assert!(SarimaxSpec::new((1, 1, 0), (0, 1, 1)).validate().is_ok());
    let dup = SarimaxSpec::new((1, 0, 0), (0, 0, 0)).with_exogenous(["a", "a"]);
    assert!(dup.validate().is_err());
    assert_eq!(
        SarimaxSpec::new((1, 0, 1), (0, 1, 1)).to_string(),
        "SARIMAX(1,0,1)x(0,1,1,12)"
    );
    let grid = default_grid();
    assert_eq!(grid.len(), 64);
    assert_eq!(grid[0].key(), [0; 6]);
    assert_eq!(grid[1].key(), [0, 0, 0, 0, 0, 1]);
    assert!(grid.windows(2).all(|w| w[0].key() < w[1].key()));
    assert!(fit_values(&[1.0, 2.0, 3.0], &SarimaxSpec::new((1, 0, 0), (0, 0, 0))).is_err());
}

#[test]
fn exogenous_regression_recovered() {
    let e = noise(12, 240);
    let x: Vec<f64> = (0..240).map(|t| (t % 7) as f64).collect();
    let y: Vec<f64> = (0..240).map(|t| 5.0 + 2.0 * x[t] + e[t]).collect();
    let mut ts = TimeSeries::from_values(YearMonth::new(2000, 1), y);
    ts.exogenous.insert("x".into(), x);
    let spec = SarimaxSpec::new((1, 0, 0), (0, 0, 0)).with_exogenous(["x"]);
    let fit = sarimax_fit(&ts, &spec).unwrap();
    assert!((fit.exogenous_coefficients[0].1 - 2.0).abs() < 0.1);
    assert!(fit.ar[0].abs() < 0.15);
    assert_eq!(fit.k, 4);

    let mut future = BTreeMap::new();
    assert!(matches!(forecast(&fit, 2, &future), Err(TsError::FutureExogenous(_))));
    future.insert("x".to_string(), vec![0.0, 10.0]);
    let fc = forecast(&fit, 2, &future).unwrap();
    assert!((fc.point[1] - fc.point[0] - 20.0).abs() < 1.5);
    assert!(sarimax_fit(&ts, &SarimaxSpec::new((1, 0, 0), (0, 0, 0)).with_exogenous(["nope"])).is_err());
}

#[test]
fn grid_picks_argmin_and_singletons() {
    let ts = TimeSeries::from_values(YearMonth::new(2000, 1), ar1(9, 150, 0.6));
    let grid: Vec<SarimaxSpec> = default_grid().into_iter().filter(|s| s.key()[4] == 0).take(8).collect();
    let search = sarimax_grid_search(&ts, &grid).unwrap();
    let min = search.candidates.iter().filter_map(|c| c.aic).fold(f64::INFINITY, f64::min);
    assert_eq!(search.best.aic, min);
    assert!(search.best.spec.order.0 == 1 || search.best.spec.order.2 == 1);

    let one = sarimax_grid_search(&ts, &grid[3..4]).unwrap();
    assert_eq!(one.best.spec, grid[3]);
    assert!(sarimax_grid_search(&ts, &[]).is_err());
}

#[test]
fn grid_on_white_noise_never_differences_and_favours_mean_model() {
    // Each one-parameter alternative beats the mean model on AIC with
    // probability P(χ²₁ > 2) ≈ 0.157, so min-AIC over the full grid picks
    // the mean model in only a bit over half of white-noise samples.
    let mut counts: BTreeMap<[usize; 6], usize> = BTreeMap::new();
    for seed in 0..20 {
        let ts = TimeSeries::from_values(YearMonth::new(1990, 1), noise(200 + seed, 120));
        let best = sarimax_grid_search(&ts, &default_grid()).unwrap().best;
        assert_eq!(best.conditioned_on, 13);
        *counts.entry(best.spec.key()).or_default() += 1;
    }
    assert!(counts.keys().all(|k| k[1] == 0 && k[4] == 0), "{counts:?}");
    let null = counts.get(&[0; 6]).copied().unwrap_or(0);
    assert!(counts.values().all(|&c| c <= null), "{counts:?}");
    assert!(null >= 8, "{counts:?}");
}

#[test]
fn one_step_rmse_close_to_sigma() {
    let y = ar1(21, 700, 0.6);
    let (train, test) = y.split_at(500);
    let fit = fit_values(train, &SarimaxSpec::new((1, 0, 0), (0, 0, 0))).unwrap();
    let phi = fit.ar[0];
    let mu = fit.mean.unwrap();
    let mut sse = 0.0;
    let mut prev = train[train.len() - 1];
    for &v in test {
        let pred = mu + phi * (prev - mu);
        sse += (v - pred) * (v - pred);
        prev = v;
    }
    let rmse = (sse / test.len() as f64).sqrt();
    assert!((rmse - 1.0).abs() < 0.1, "{rmse}");
    // the first of those predictions is the model's own 1-step forecast
    let fc = forecast(&fit, 1, &BTreeMap::new()).unwrap();
    assert!((fc.point[0] - (mu + phi * (train[499] - mu))).abs() < 1e-9);
}

#[test]
fn forecast_variance_grows_for_integrated_model() {
    let mut walk = vec![0.0; 200];
    let e = noise(31, 200);
    for t in 1..200 {
        walk[t] = walk[t - 1] + e[t];
    }
    let fit = fit_values(&walk, &SarimaxSpec::new((0, 1, 1), (0, 0, 0))).unwrap();
    let fc = forecast(&fit, 24, &BTreeMap::new()).unwrap();
    assert!(fc.variance.windows(2).all(|w| w[1] > w[0]));
    // random walk without drift: point forecast stays put after the first step
    assert!(fc.point.windows(2).all(|w| (w[1] - w[0]).abs() < 1e-9));
    assert!((fc.variance[0] - fit.sigma2).abs() < 1e-9 * fit.sigma2);

    let seasonal = fit_values(&walk, &SarimaxSpec::new((1, 0, 0), (0, 1, 1))).unwrap();
    let fc = forecast(&seasonal, 30, &BTreeMap::new()).unwrap();
    assert!(fc.variance.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn interval_levels_nest() {
    let y = ar1(41, 300, 0.4);
    let fit = fit_values(&y, &SarimaxSpec::new((1, 0, 1), (0, 0, 0))).unwrap();
    let none = BTreeMap::new();
    let lo = forecast_with_level(&fit, 12, &none, 0.8).unwrap();
    let hi = forecast_with_level(&fit, 12, &none, 0.95).unwrap();
    for h in 0..12 {
        assert!(hi.lower[h] < lo.lower[h] && lo.upper[h] < hi.upper[h]);
        assert_eq!(hi.point[h], lo.point[h]);
    }
    assert!(forecast_with_level(&fit, 1, &none, 1.0).is_err());
}

#[test]
fn forecast_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fc.csv");
    let fc = Forecast {
        level: 0.95,
        point: vec![1.0, 2.0],
        lower: vec![0.0, 0.5],
        upper: vec![2.0, 3.5],
        variance: vec![0.25, 0.5],
    };
    let months = [YearMonth::new(2020, 12), YearMonth::new(2021, 1)];
    write_forecast_csv(&path, &months, &fc).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "month,point,low,high\n2020-12,1,0,2\n2021-01,2,0.5,3.5\n");

    let ts = TimeSeries::from_values(YearMonth::new(2020, 11), vec![1.5, 2.0]);
    let path = dir.path().join("series.csv");
    ts.write_csv(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "month,value\n2020-11,1.5\n2020-12,2\n");
    assert_eq!(ts.future_months(1), vec![YearMonth::new(2021, 1)]);
}

/// Autocovariances from the MA(∞) weights, an independent route to the
/// stationary covariance of an ARMA process.
pub(crate) fn psi_autocovariance(ar: &[f64], ma: &[f64], sigma2: f64, max_lag: usize) -> Vec<f64> {
    const TERMS: usize = 20_000;
    let mut psi = vec![0.0; TERMS + max_lag];
    for j in 0..psi.len() {
        let mut v = if j == 0 { 1.0 } else { ma.get(j - 1).copied().unwrap_or(0.0) };
        for (i, phi) in ar.iter().enumerate() {
            if j > i {
                v += phi * psi[j - i - 1];
            }
        }
        psi[j] = v;
    }
    (0..=max_lag)
        .map(|h| sigma2 * (0..TERMS).map(|j| psi[j] * psi[j + h]).sum::<f64>())
        .collect()
}

pub(crate) fn joint_gaussian_log_likelihood(y: &[f64], gamma: &[f64]) -> f64 {
    let n = y.len();
    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = gamma[i.abs_diff(j)];
        }
    }
    let chol = Cholesky::factor(&cov).unwrap();
    let sol = chol.solve(y).unwrap();
    let quad: f64 = y.iter().zip(&sol).map(|(a, b)| a * b).sum();
    -0.5 * (n as f64 * (2.0 * PI).ln() + chol.log_det() + quad)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kalman_matches_joint_gaussian(
        n in 1usize..=6,
        orders in (0usize..=2, 0usize..=2, 0usize..=1, 0usize..=1),
        raw in prop::collection::vec(-1.5f64..1.5, 6),
        y in prop::collection::vec(-3.0f64..3.0, 6),
        sigma2 in 0.2f64..3.0,
    ) {
        let (p, q, sp, sq) = orders;
        let ar = pacf_to_coefficients(&raw[..p]);
        let ma: Vec<f64> = pacf_to_coefficients(&raw[2..2 + q]).iter().map(|v| -v).collect();
        let sar = pacf_to_coefficients(&raw[4..4 + sp]);
        let sma: Vec<f64> = pacf_to_coefficients(&raw[5..5 + sq]).iter().map(|v| -v).collect();
        let (ar_full, ma_full) = expand_polynomials(&ar, &sar, &ma, &sma, 4);
        let gamma = psi_autocovariance(&ar_full, &ma_full, sigma2, n);
        let oracle = joint_gaussian_log_likelihood(&y[..n], &gamma);
        let ll = arma_log_likelihood(&y[..n], &ar_full, &ma_full, sigma2);
        prop_assert!((ll - oracle).abs() < 1e-8, "{} vs {}", ll, oracle);
    }

    #[test]
    fn differencing_round_trip_is_exact(
        values in prop::collection::vec(-1000i32..1000, 30..60),
        d in 0usize..=2,
        sd in 0usize..=1,
    ) {
        let y: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let s = 12;
        let m = d + s * sd;
        let w = difference(&y, d, sd, s);
        prop_assert_eq!(w.len(), y.len() - m);
        prop_assert_eq!(integrate(&w, &y[..m], d, sd, s), y);
    }

    #[test]
    fn seasonal_components_sum_to_zero(values in prop::collection::vec(-50.0f64..50.0, 24..60)) {
        let d = decompose(&values, 12).unwrap();
        let total: f64 = d.seasonal[..12].iter().sum();
        prop_assert!(total.abs() < 1e-9);
    }
}
