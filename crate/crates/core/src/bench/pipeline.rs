use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{kmeans_fit, ordinal_svm_fit, KMeansModel, OrdinalSvmModel};
use crate::data::{
    build_design_matrix_with, feature_row, genre_vocabulary, load_movies, Binner, ClassLabel,
    ColumnMap, DesignMatrix, Feature, MovieRecord, NumericField, YearWindow,
};
use crate::inference::distributions::chi2_sf;
use crate::inference::{
    confusion_and_accuracy, durbin_watson, jaccard, jarque_bera, regression_report, roc_auc,
    select_best_univariate, silhouette, skew_kurtosis, univariate_r2, vif, wald_test,
    ConfusionMatrix, Df, StatTestResult, Validity,
};
use crate::linear::{fit_lasso, fit_logistic, fit_ols, fit_ridge, LinearFit, LogisticFit};
use crate::neural::{mlp_init_with, mlp_predict, mlp_train, MlpModel};
use crate::numerics::Matrix;
use crate::timeseries::{
    acf, adf_test, aggregate_monthly, forecast_with_level, ljung_box, pacf, sarimax_grid_search,
};

use super::config::{remap_column, ModelKind, RunConfig};
use super::report::*;
use super::BenchError;

const TARGET: &str = "metascore";
const SUCCESS_TARGET: &str = "success";

fn stage<E>(name: &'static str) -> impl FnOnce(E) -> BenchError
where
    E: std::error::Error + Send + Sync + 'static,
{
    move |e| BenchError::Stage {
        stage: name,
        source: Box::new(e),
    }
}

fn stage_msg(name: &'static str, msg: impl Into<String>) -> BenchError {
    BenchError::Stage {
        stage: name,
        source: msg.into().into(),
    }
}

/// Column-wise standardization fitted on training rows; constant columns
/// are centred only.
#[derive(Debug, Clone)]
struct Scaler {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Scaler {
    fn fit(x: &Matrix) -> Self {
        let sd = x
            .column_std()
            .into_iter()
            .map(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 })
            .collect();
        Self {
            mean: x.column_means(),
            sd,
        }
    }

    fn row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.sd[j];
        }
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.row(out.row_mut(i));
        }
        out
    }
}

/// A fitted model reduced to what per-movie prediction needs.
enum Predictor {
    Linear(LinearFit),
    Logistic(LogisticFit),
    KMeans(KMeansModel, Scaler),
    Svm(OrdinalSvmModel, Scaler),
    Ann(MlpModel, Scaler),
}

struct Fitted {
    kind: ModelKind,
    features: Vec<Feature>,
    predictor: Predictor,
}

impl Fitted {
    fn row(&self, r: &MovieRecord) -> Option<Vec<f64>> {
        feature_row(r, &self.features)
    }

    fn predict(&self, r: &MovieRecord, binner: &Binner) -> Option<ClassLabel> {
        let mut row = self.row(r)?;
        let label = match &self.predictor {
            Predictor::Linear(fit) => binner.label(fit.predict_row(&row)),
            Predictor::Logistic(fit) => {
                if fit.predict_proba_row(&row) >= 0.5 {
                    ClassLabel::Hit
                } else {
                    ClassLabel::Flop
                }
            }
            Predictor::KMeans(m, s) => {
                s.row(&mut row);
                m.predict(&Matrix::from_vec(1, row.len(), row).ok()?).ok()?[0]
            }
            Predictor::Svm(m, s) => {
                s.row(&mut row);
                m.classify_score(m.score_row(&row))
            }
            Predictor::Ann(m, s) => {
                s.row(&mut row);
                mlp_predict(m, &Matrix::from_vec(1, row.len(), row).ok()?).ok()?[0]
            }
        };
        Some(label)
    }

    /// Truth on this model's label scale: binary models see Hit or Flop.
    fn truth(&self, r: &MovieRecord, binner: &Binner) -> Option<ClassLabel> {
        let score = r.metascore? as f64;
        Some(match self.predictor {
            Predictor::Logistic(_) if score >= binner.hit_from => ClassLabel::Hit,
            Predictor::Logistic(_) => ClassLabel::Flop,
            _ => binner.label(score),
        })
    }

    /// Confusion matrix, accuracy and row count over the scorable records.
    fn evaluate(
        &self,
        records: &[MovieRecord],
        binner: &Binner,
    ) -> Option<(ConfusionMatrix, f64, usize)> {
        let (pred, truth): (Vec<_>, Vec<_>) = records
            .iter()
            .filter_map(|r| Some((self.predict(r, binner)?, self.truth(r, binner)?)))
            .unzip();
        let (cm, acc) = confusion_and_accuracy(&pred, &truth).ok()?;
        Some((cm, acc, pred.len()))
    }
}

fn task_of(kind: ModelKind) -> Task {
    match kind {
        ModelKind::Logistic => Task::Binary,
        k if k.is_regression() => Task::Regression,
        _ => Task::Ternary,
    }
}

fn resolve_all(names: &[String], vocabulary: &[String]) -> Vec<Feature> {
    names
        .iter()
        .map(|n| Feature::resolve(n, vocabulary).expect("features checked after ingestion"))
        .collect()
}

/// Drops columns that are constant on the training rows.
fn drop_constant(dm: DesignMatrix) -> Result<(DesignMatrix, Vec<String>), BenchError> {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (j, name) in dm.column_names.iter().enumerate() {
        let col = dm.values.column(j);
        if col.iter().all(|&v| v == col[0]) {
            dropped.push(name.clone());
        } else {
            keep.push(name.clone());
        }
    }
    if keep.is_empty() {
        return Err(stage_msg("preprocess", "every feature is constant on the training rows"));
    }
    let dm = dm.select(&keep).map_err(stage("preprocess"))?;
    Ok((dm, dropped))
}

/// Evenly spaced indices, at most `cap` of them.
fn thin(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        (0..n).collect()
    } else {
        (0..cap).map(|i| i * n / cap).collect()
    }
}

fn grouped_silhouette(x: &Matrix, groups: &[usize], cap: usize) -> Option<f64> {
    let idx = thin(x.rows(), cap);
    let g: Vec<usize> = idx.iter().map(|&i| groups[i]).collect();
    if g.iter().collect::<BTreeSet<_>>().len() < 2 {
        return None;
    }
    silhouette(&x.select_rows(&idx), &g).ok()
}

fn loss_curve_type(loss: &[f64]) -> &'static str {
    if loss.windows(2).all(|w| w[1] < w[0]) {
        "strictly decreasing"
    } else if loss.windows(2).all(|w| w[1] <= w[0]) {
        "non-increasing"
    } else {
        "non-monotone"
    }
}

/// Last lag outside the ±1.96/√n band before the first lag inside it.
fn cutoff_lag(values: &[f64], n: usize) -> usize {
    let band = 1.96 / (n as f64).sqrt();
    values
        .iter()
        .skip(1)
        .position(|v| v.abs() < band)
        .unwrap_or(values.len().saturating_sub(1))
}

fn canonical(name: &str) -> String {
    NumericField::from_name(name)
        .map(|f| f.name().to_string())
        .unwrap_or_else(|| name.to_string())
}

fn sort_records(records: &mut [MovieRecord]) {
    records.sort_by(|a, b| {
        a.date_published
            .cmp(&b.date_published)
            .then_with(|| a.title.cmp(&b.title))
    });
}

/// Row counts and class balance of a movie table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub path: PathBuf,
    pub rows_loaded: usize,
    pub rows_dropped: usize,
    pub drop_reasons: BTreeMap<String, usize>,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub excluded_rows: usize,
    pub with_metascore: usize,
    /// Flop, Neutral, Hit counts among rows with a metascore.
    pub class_counts: [usize; 3],
    pub genre_vocabulary: Vec<String>,
    /// Non-missing count per optional numeric field.
    pub present: BTreeMap<String, usize>,
}

pub fn ingest_summary(
    path: &Path,
    map: &ColumnMap,
    window: &YearWindow,
    binner: &Binner,
) -> Result<IngestSummary, BenchError> {
    let loaded = load_movies(path, map).map_err(stage("ingest"))?;
    let recs = &loaded.records;
    let split = window.split(recs);
    let mut class_counts = [0usize; 3];
    for r in recs {
        if let Some(m) = r.metascore {
            class_counts[binner.label(m as f64).index()] += 1;
        }
    }
    let present = [
        NumericField::Top1000VotersRating,
        NumericField::Budget,
        NumericField::ReviewsFromUsers,
        NumericField::ReviewsFromCritics,
        NumericField::Metascore,
    ]
    .into_iter()
    .map(|f| {
        let n = recs.iter().filter(|r| r.numeric(f).is_some()).count();
        (f.name().to_string(), n)
    })
    .collect();
    Ok(IngestSummary {
        path: path.to_path_buf(),
        rows_loaded: recs.len(),
        rows_dropped: loaded.dropped,
        drop_reasons: loaded.drop_reasons.clone(),
        first_year: recs.iter().map(|r| r.year).min(),
        last_year: recs.iter().map(|r| r.year).max(),
        train_rows: split.train.len(),
        validation_rows: split.validation.len(),
        excluded_rows: split.excluded,
        with_metascore: recs.iter().filter(|r| r.metascore.is_some()).count(),
        class_counts,
        genre_vocabulary: genre_vocabulary(recs),
        present,
    })
}

struct Prepared {
    summary: DatasetSummary,
    train: Vec<MovieRecord>,
    validation: Vec<MovieRecord>,
    vocabulary: Vec<String>,
}

fn prepare(config: &RunConfig) -> Result<Prepared, BenchError> {
    let loaded = load_movies(&config.dataset, &config.column_map).map_err(stage("ingest"))?;
    let rows_loaded = loaded.records.len();
    let mut records: Vec<MovieRecord> = loaded
        .records
        .into_iter()
        .filter(|r| r.metascore.is_some())
        .collect();
    let rows_without_metascore = rows_loaded - records.len();
    sort_records(&mut records);
    let split = config.split.split(&records);
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(stage_msg(
            "split",
            format!(
                "need rows on both sides of the split, got {} train and {} validation",
                split.train.len(),
                split.validation.len()
            ),
        ));
    }
    let vocabulary = genre_vocabulary(&split.train);
    for model in config.selected_models() {
        for name in config.features.get(model) {
            if Feature::resolve(name, &vocabulary).is_err() {
                return Err(BenchError::Config(format!(
                    "{model}: feature `{name}` is neither a numeric field nor a genre in the training rows"
                )));
            }
        }
    }
    Ok(Prepared {
        summary: DatasetSummary {
            path: config.dataset.clone(),
            rows_loaded,
            rows_dropped: loaded.dropped,
            drop_reasons: loaded.drop_reasons,
            rows_without_metascore,
            train_rows: split.train.len(),
            validation_rows: split.validation.len(),
            excluded_rows: split.excluded,
            thresholds: config.thresholds,
            split: config.split,
            genre_vocabulary: vocabulary.clone(),
        },
        train: split.train,
        validation: split.validation,
        vocabulary,
    })
}

struct Fits {
    fitted: Vec<Fitted>,
    rows: Vec<ModelRow>,
    wald: Option<WaldTable>,
    regression: RegressionTable,
    classification: Vec<ClassificationRow>,
    ann: Option<AnnSummary>,
}

fn model_row(
    f: &Fitted,
    names: Vec<String>,
    dropped: Vec<String>,
    n_train: usize,
    validation: &[MovieRecord],
    binner: &Binner,
) -> Result<ModelRow, BenchError> {
    let (confusion, accuracy, n_test) = f.evaluate(validation, binner).ok_or_else(|| {
        stage_msg(
            "evaluate",
            format!("{}: no validation row has every feature", f.kind),
        )
    })?;
    Ok(ModelRow {
        model: f.kind,
        task: task_of(f.kind),
        features: names,
        dropped_constant: dropped,
        n_train,
        n_test,
        accuracy,
        confusion,
        n_recent: None,
        accuracy_recent: None,
        validity: None,
    })
}

fn fit_linear(kind: ModelKind, dm: &DesignMatrix, config: &RunConfig) -> Result<LinearFit, BenchError> {
    let name = "fit";
    match kind {
        ModelKind::Slr | ModelKind::Mlr => fit_ols(dm).map_err(stage(name)),
        ModelKind::Ridge => fit_ridge(dm, config.ridge_lambda).map_err(stage(name)),
        ModelKind::Lasso => fit_lasso(dm, config.lasso_lambda).map_err(stage(name)),
        _ => unreachable!("not a linear model"),
    }
}

fn fit_models(config: &RunConfig, prep: &Prepared) -> Result<Fits, BenchError> {
    let binner = &config.thresholds;
    let vocab = &prep.vocabulary;
    let train = &prep.train;
    let validation = &prep.validation;
    let cap = config.silhouette_max_points;
    let mut out = Fits {
        fitted: Vec::new(),
        rows: Vec::new(),
        wald: None,
        regression: RegressionTable {
            rows: Vec::new(),
            slr_screening: None,
        },
        classification: Vec::new(),
        ann: None,
    };
    let design = |names: &[String]| {
        build_design_matrix_with(train, names, TARGET, vocab).map_err(stage("preprocess"))
    };

    for kind in config.selected_models() {
        log::info!("fitting {kind}");
        let configured = config.features.get(kind).to_vec();
        match kind {
            ModelKind::Slr | ModelKind::Mlr | ModelKind::Ridge | ModelKind::Lasso => {
                let (dm, dropped) = drop_constant(design(&configured)?)?;
                let dm = if kind == ModelKind::Slr {
                    let scores = univariate_r2(&dm).map_err(stage("preprocess"))?;
                    let best = select_best_univariate(&scores)
                        .ok_or_else(|| stage_msg("preprocess", "no usable SLR candidate"))?
                        .name
                        .clone();
                    out.regression.slr_screening = Some(FeatureScreening {
                        univariate_r2: scores,
                        vif: vif(&dm)
                            .ok()
                            .map(|v| v.into_iter().map(|(name, vif)| VifEntry { name, vif }).collect()),
                        selected: best.clone(),
                    });
                    dm.select(std::slice::from_ref(&best)).map_err(stage("preprocess"))?
                } else {
                    dm
                };
                let fit = fit_linear(kind, &dm, config)?;
                let fitted = Fitted {
                    kind,
                    features: resolve_all(&dm.column_names, vocab),
                    predictor: Predictor::Linear(fit.clone()),
                };
                let mut row = model_row(
                    &fitted,
                    dm.column_names.clone(),
                    if kind == ModelKind::Slr { Vec::new() } else { dropped },
                    dm.n_rows(),
                    validation,
                    binner,
                )?;
                let report = regression_report(kind.label(), &fit, &dm, row.accuracy, config.lm_lags)
                    .map_err(stage("diagnostics"))?;
                row.validity = Some(report.validity.clone());
                out.regression.rows.push(RegressionRow {
                    report,
                    intercept: fit.intercept,
                    coefficients: fit.names.iter().cloned().zip(fit.coefficients.iter().copied()).collect(),
                    lambda: fit.lambda,
                    converged: fit.converged,
                });
                out.rows.push(row);
                out.fitted.push(fitted);
            }
            ModelKind::Logistic => {
                let hit = binner.hit_from;
                let (dm, dropped) = drop_constant(design(&configured)?)?;
                let dm = dm.map_target(SUCCESS_TARGET, |m| if m >= hit { 1.0 } else { 0.0 });
                let fit = fit_logistic(&dm).map_err(stage("fit"))?;
                let fitted = Fitted {
                    kind,
                    features: resolve_all(&dm.column_names, vocab),
                    predictor: Predictor::Logistic(fit.clone()),
                };
                let mut row = model_row(&fitted, dm.column_names.clone(), dropped, dm.n_rows(), validation, binner)?;
                let lr = 2.0 * (fit.log_likelihood - fit.null_log_likelihood).max(0.0);
                let df = fit.coefficients.len() as f64;
                let likelihood_ratio =
                    StatTestResult::with_p_value("likelihood_ratio", lr, chi2_sf(lr, df), Df::One(df));
                let rows = if fit.converged {
                    wald_test(&fit).map_err(stage("diagnostics"))?
                } else {
                    Vec::new()
                };
                let mut reasons = Vec::new();
                if !fit.converged || fit.separated {
                    reasons.push("IRLS did not converge".to_string());
                }
                if likelihood_ratio.reject_at_5pct != Some(true) {
                    reasons.push(crate::inference::REASON_INSIGNIFICANT.to_string());
                }
                row.validity = Some(Validity {
                    valid: reasons.is_empty(),
                    reasons,
                });
                let (scores, labels): (Vec<f64>, Vec<bool>) = validation
                    .iter()
                    .filter_map(|r| {
                        let x = fitted.row(r)?;
                        Some((fit.predict_proba_row(&x), r.metascore? as f64 >= hit))
                    })
                    .unzip();
                out.wald = Some(WaldTable {
                    rows,
                    pseudo_r2: fit.pseudo_r2(),
                    log_likelihood: fit.log_likelihood,
                    null_log_likelihood: fit.null_log_likelihood,
                    likelihood_ratio,
                    converged: fit.converged,
                    separated: fit.separated,
                    iterations: fit.iterations,
                    test_auc: roc_auc(&scores, &labels).ok(),
                });
                out.rows.push(row);
                out.fitted.push(fitted);
            }
            ModelKind::KMeans | ModelKind::Svm | ModelKind::Ann => {
                let dm = design(&configured)?;
                let labels: Vec<ClassLabel> = dm.target.iter().map(|&m| binner.label(m)).collect();
                let scaler = Scaler::fit(&dm.values);
                let x = scaler.apply(&dm.values);
                let features = resolve_all(&dm.column_names, vocab);
                let fitted = match kind {
                    ModelKind::KMeans => {
                        let mut model = kmeans_fit(&x, 3, config.seeds.kmeans, config.kmeans_restarts)
                            .map_err(stage("fit"))?;
                        model.label_clusters(&labels).map_err(stage("fit"))?;
                        let sil = grouped_silhouette(&x, &model.assignments, cap);
                        let detail = ClassifierDetail::KMeans {
                            inertia: model.inertia,
                            restart: model.restart,
                            iterations: model.iterations,
                            cluster_to_class: model.cluster_to_class.clone(),
                        };
                        (Predictor::KMeans(model, scaler), sil, Some(detail))
                    }
                    ModelKind::Svm => {
                        let model = ordinal_svm_fit(
                            &x,
                            &dm.column_names,
                            &labels,
                            config.svm.c,
                            config.svm.epochs,
                            config.seeds.svm,
                        )
                        .map_err(stage("fit"))?;
                        let groups: Vec<usize> = x
                            .row_iter()
                            .map(|r| model.classify_score(model.score_row(r)).index())
                            .collect();
                        let sil = grouped_silhouette(&x, &groups, cap);
                        let detail = ClassifierDetail::Svm {
                            weights: model.names.iter().cloned().zip(model.weights.iter().copied()).collect(),
                            thresholds: model.thresholds,
                            c: model.c,
                            epochs: model.epochs,
                        };
                        (Predictor::Svm(model, scaler), sil, Some(detail))
                    }
                    _ => {
                        let mut sizes = vec![x.cols()];
                        sizes.extend(&config.mlp.hidden);
                        sizes.push(ClassLabel::ALL.len());
                        let init = mlp_init_with(&sizes, config.seeds.mlp).map_err(stage("fit"))?;
                        let train_cfg = crate::neural::TrainConfig {
                            seed: config.seeds.mlp,
                            ..config.mlp.train.clone()
                        };
                        let (model, trace) = mlp_train(&init, &x, &labels, &train_cfg).map_err(stage("fit"))?;
                        out.ann = Some(AnnSummary {
                            attributes: dm.column_names.clone(),
                            architecture: sizes,
                            output_type: "Ternary".into(),
                            activation: "Logistic".into(),
                            optimizer: "Adam".into(),
                            early_stopping: train_cfg.early_stopping,
                            validation_fraction: train_cfg.validation_fraction,
                            n_train: trace.n_train,
                            n_validation: trace.n_validation,
                            initial_loss: trace.loss[0],
                            final_loss: *trace.loss.last().expect("at least one epoch"),
                            epochs_trained: trace.stopped_epoch,
                            best_epoch: trace.best_epoch,
                            loss_curve_type: loss_curve_type(&trace.loss).into(),
                            loss_curve: trace.loss.clone(),
                            validation_loss: trace.validation_loss.clone(),
                            test_accuracy: 0.0,
                            accuracy_recent: None,
                            published_recent_accuracy: PUBLISHED_ANN_2020_ACCURACY,
                        });
                        (Predictor::Ann(model, scaler), None, None)
                    }
                };
                let (predictor, sil, detail) = fitted;
                let fitted = Fitted {
                    kind,
                    features,
                    predictor,
                };
                let row = model_row(&fitted, dm.column_names.clone(), Vec::new(), dm.n_rows(), validation, binner)?;
                if let Some(detail) = detail {
                    out.classification.push(ClassificationRow {
                        model: kind,
                        silhouette: sil,
                        accuracy: row.accuracy,
                        detail,
                    });
                }
                if let Some(ann) = &mut out.ann {
                    if kind == ModelKind::Ann {
                        ann.test_accuracy = row.accuracy;
                    }
                }
                out.rows.push(row);
                out.fitted.push(fitted);
            }
        }
    }
    Ok(out)
}

/// Monthly series of the training rows, order search and forecast.
fn timeseries_stage(records: &[MovieRecord], config: &RunConfig) -> Result<TimeseriesReport, BenchError> {
    let ts_cfg = &config.timeseries;
    let name = "timeseries";
    let series = aggregate_monthly(records).map_err(stage(name))?;
    let n = series.len();
    let y = &series.values;
    let max_lag = ts_cfg.max_lag.min(n / 2).max(1);
    let acf_v = acf(y, max_lag).map_err(stage(name))?;
    let pacf_v = pacf(y, max_lag).map_err(stage(name))?;
    let adf = adf_test(y, None).map_err(stage(name))?;
    let search = sarimax_grid_search(&series, &ts_cfg.specs()).map_err(stage(name))?;
    let best = &search.best;
    let resid = &best.residuals;
    let rmse = (resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64).sqrt();
    let lb_lags = (resid.len() / 5).clamp(1, 10);
    let ljung = ljung_box(resid, lb_lags).map_err(stage(name))?;
    let (skewness, kurtosis) = skew_kurtosis(resid).map_err(stage(name))?;
    let jb = jarque_bera(resid).map_err(stage(name))?;
    let dw = durbin_watson(resid).map_err(stage(name))?.statistic;

    let future: BTreeMap<String, Vec<f64>> = best
        .spec
        .exogenous
        .iter()
        .map(|e| {
            let v = series.exogenous(e).map_err(stage(name))?;
            let tail = &v[v.len().saturating_sub(12)..];
            let m = tail.iter().sum::<f64>() / tail.len() as f64;
            Ok((e.clone(), vec![m; ts_cfg.horizon]))
        })
        .collect::<Result<_, BenchError>>()?;
    let fc = forecast_with_level(best, ts_cfg.horizon, &future, ts_cfg.level).map_err(stage(name))?;
    let forecast = series
        .future_months(ts_cfg.horizon)
        .into_iter()
        .enumerate()
        .map(|(i, month)| ForecastPoint {
            month,
            point: fc.point[i],
            low: fc.lower[i],
            high: fc.upper[i],
        })
        .collect();

    Ok(TimeseriesReport {
        series: series
            .months
            .iter()
            .zip(y)
            .map(|(&month, &value)| SeriesPoint { month, value })
            .collect(),
        interpolated_months: series.interpolated.iter().filter(|&&b| b).count(),
        acf_cutoff: cutoff_lag(&acf_v, n),
        pacf_cutoff: cutoff_lag(&pacf_v, n),
        acf: acf_v,
        pacf: pacf_v,
        adf,
        orders: best.spec.key(),
        exogenous: best.spec.exogenous.clone(),
        ar: best.ar.clone(),
        ma: best.ma.clone(),
        seasonal_ar: best.seasonal_ar.clone(),
        seasonal_ma: best.seasonal_ma.clone(),
        mean: best.mean,
        exogenous_coefficients: best.exogenous_coefficients.clone(),
        sigma2: best.sigma2,
        rmse,
        log_likelihood: best.log_likelihood,
        aic: best.aic,
        bic: best.bic,
        hqic: best.hqic,
        k: best.k,
        n_obs: best.n_obs,
        ljung_box: ljung,
        skewness,
        kurtosis,
        jarque_bera: jb,
        durbin_watson: dw,
        candidates: search
            .candidates
            .iter()
            .map(|c| CandidateScore {
                orders: c.spec.key(),
                aic: c.aic,
                error: c.error.clone(),
            })
            .collect(),
        forecast_level: fc.level,
        forecast,
    })
}

/// Builds the per-movie table from the most recent scorable movies.
fn predict_movies(
    fitted: &[Fitted],
    records: &[MovieRecord],
    binner: &Binner,
    limit: usize,
) -> Result<Vec<PredictionRow>, BenchError> {
    let mut recs: Vec<&MovieRecord> = records.iter().filter(|r| r.metascore.is_some()).collect();
    recs.sort_by(|a, b| {
        b.date_published
            .cmp(&a.date_published)
            .then_with(|| a.title.cmp(&b.title))
    });
    let mut rows = Vec::new();
    for r in recs {
        if rows.len() == limit {
            break;
        }
        let cells: BTreeMap<ModelKind, String> = fitted
            .iter()
            .map(|f| {
                let cell = f
                    .predict(r, binner)
                    .map(|l| l.code().to_string())
                    .unwrap_or_else(|| MISSING_CELL.to_string());
                (f.kind, cell)
            })
            .collect();
        if cells.values().all(|c| c == MISSING_CELL) {
            continue;
        }
        rows.push(PredictionRow {
            movie: r.title.clone(),
            date_published: r.date_published,
            truth: binner
                .label(r.metascore.expect("filtered") as f64)
                .code()
                .to_string(),
            cells,
        });
    }
    if rows.is_empty() && !fitted.is_empty() && limit > 0 {
        return Err(stage_msg("predict", "no scorable movies"));
    }
    Ok(rows)
}

fn load_recent(config: &RunConfig) -> Result<Option<(RecentSummary, Vec<MovieRecord>)>, BenchError> {
    let Some(slot) = &config.test_2020 else {
        return Ok(None);
    };
    let mut map = slot.column_map.clone();
    for (field, header) in &slot.rename {
        remap_column(&mut map, field, header)?;
        log::warn!("test_2020: field `{field}` is read from column `{header}`");
    }
    let loaded = load_movies(&slot.path, &map).map_err(stage("ingest test_2020"))?;
    let summary = RecentSummary {
        path: slot.path.clone(),
        rows_loaded: loaded.records.len(),
        rows_dropped: loaded.dropped,
        substitutions: slot.rename.iter().map(|(f, h)| (f.clone(), h.clone())).collect(),
    };
    Ok(Some((summary, loaded.records)))
}

/// Ingest, split, fit every selected model, run the diagnostics and the
/// time-series search, and assemble the report. Deterministic given the
/// config; any failing stage aborts the run.
pub fn run_pipeline(config: &RunConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let prep = prepare(config)?;
    let recent = load_recent(config)?;
    let binner = &config.thresholds;
    let mut fits = fit_models(config, &prep)?;

    if let Some((_, recs)) = &recent {
        for (row, f) in fits.rows.iter_mut().zip(&fits.fitted) {
            if let Some((_, acc, n)) = f.evaluate(recs, binner) {
                row.accuracy_recent = Some(acc);
                row.n_recent = Some(n);
            }
        }
        if let Some(ann) = &mut fits.ann {
            ann.accuracy_recent = fits
                .rows
                .iter()
                .find(|r| r.model == ModelKind::Ann)
                .and_then(|r| r.accuracy_recent);
        }
    }

    let timeseries = if config.timeseries.enabled {
        log::info!("fitting SARIMAX grid of {} specs", config.timeseries.grid.len());
        Some(timeseries_stage(&prep.train, config)?)
    } else {
        None
    };

    let mut jaccard_rows = Vec::new();
    for (&model, recent_attrs) in &config.recent_attributes {
        let Some(row) = fits.rows.iter().find(|r| r.model == model) else {
            continue;
        };
        let attributes = if model == ModelKind::Slr {
            row.features.clone()
        } else {
            config.features.get(model).to_vec()
        };
        let a: BTreeSet<String> = attributes.iter().map(|s| canonical(s)).collect();
        let b: BTreeSet<String> = recent_attrs.iter().map(|s| canonical(s)).collect();
        let index = jaccard(&a, &b).map_err(stage("jaccard"))?;
        jaccard_rows.push(JaccardRow {
            model,
            attributes,
            attributes_recent: recent_attrs.clone(),
            intersection: a.intersection(&b).count(),
            union: a.union(&b).count(),
            index,
        });
    }

    // 2020 rows often lack the attributes a model needs; fall back to the
    // validation movies when none of them is scorable
    let from_recent = match &recent {
        Some((_, recs)) => predict_movies(&fits.fitted, recs, binner, config.prediction_rows).ok(),
        None => None,
    };
    let (source, predictions) = match from_recent {
        Some(rows) => ("test_2020", rows),
        None => (
            "validation",
            predict_movies(&fits.fitted, &prep.validation, binner, config.prediction_rows)?,
        ),
    };

    let validity = fits
        .rows
        .iter()
        .filter_map(|r| {
            r.validity.as_ref().map(|v| ValidityRuling {
                model: r.model,
                valid: v.valid,
                reasons: v.reasons.clone(),
            })
        })
        .collect();

    Ok(BenchReport {
        dataset: prep.summary,
        recent: recent.map(|(s, _)| s),
        seeds: config.seeds,
        models: fits.rows,
        wald: fits.wald,
        regression: fits.regression,
        classification: fits.classification,
        timeseries,
        ann: fits.ann,
        jaccard: jaccard_rows,
        predictions_source: source.to_string(),
        predictions,
        validity,
    })
}

/// Series, order search and forecast only.
pub fn run_forecast(config: &RunConfig) -> Result<TimeseriesReport, BenchError> {
    config.validate()?;
    let loaded = load_movies(&config.dataset, &config.column_map).map_err(stage("ingest"))?;
    let mut records: Vec<MovieRecord> = loaded.records;
    sort_records(&mut records);
    let split = config.split.split(&records);
    if split.train.is_empty() {
        return Err(stage_msg("split", "no rows inside the training window"));
    }
    timeseries_stage(&split.train, config)
}
