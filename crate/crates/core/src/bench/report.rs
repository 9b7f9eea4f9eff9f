use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Binner, ClassLabel, YearWindow};
use crate::inference::{ConfusionMatrix, RegressionReport, StatTestResult, UnivariateScore, Validity};
use crate::timeseries::{AdfResult, YearMonth};

use super::config::{ModelKind, Orders, Seeds};
use super::BenchError;

/// Cell for a movie lacking one of a model's features.
pub const MISSING_CELL: &str = "–";

/// Accuracy on the 2020 holdout as printed in the running text and in the
/// network summary table, which disagree.
pub const PUBLISHED_ANN_2020_ACCURACY: PublishedFigures = PublishedFigures {
    text: 0.88056,
    table: 0.93056,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedFigures {
    pub text: f64,
    pub table: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Continuous metascore, binned after prediction.
    Regression,
    /// Hit versus not-hit.
    Binary,
    Ternary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub path: PathBuf,
    pub rows_loaded: usize,
    pub rows_dropped: usize,
    pub drop_reasons: BTreeMap<String, usize>,
    pub rows_without_metascore: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub excluded_rows: usize,
    pub thresholds: Binner,
    pub split: YearWindow,
    pub genre_vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecentSummary {
    pub path: PathBuf,
    pub rows_loaded: usize,
    pub rows_dropped: usize,
    /// `(field, header read in its place)`.
    pub substitutions: Vec<(String, String)>,
}

/// One row of the accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: ModelKind,
    pub task: Task,
    /// Columns the model was fitted on.
    pub features: Vec<String>,
    /// Configured columns dropped for being constant on the training rows.
    pub dropped_constant: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub n_recent: Option<usize>,
    pub accuracy_recent: Option<f64>,
    /// Regression-type models only.
    pub validity: Option<Validity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldTable {
    pub rows: Vec<StatTestResult>,
    pub pseudo_r2: f64,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub likelihood_ratio: StatTestResult,
    pub converged: bool,
    pub separated: bool,
    pub iterations: usize,
    pub test_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub report: RegressionReport,
    pub intercept: f64,
    pub coefficients: Vec<(String, f64)>,
    pub lambda: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifEntry {
    pub name: String,
    #[serde(with = "crate::serde_f64")]
    pub vif: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScreening {
    pub univariate_r2: Vec<UnivariateScore>,
    /// `None` when the candidate design is rank deficient.
    pub vif: Option<Vec<VifEntry>>,
    pub selected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTable {
    pub rows: Vec<RegressionRow>,
    pub slr_screening: Option<FeatureScreening>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub model: ModelKind,
    /// Over training points grouped by cluster (k-means) or predicted class
    /// (SVM); `None` when only one group is present.
    pub silhouette: Option<f64>,
    pub accuracy: f64,
    pub detail: ClassifierDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierDetail {
    KMeans {
        inertia: f64,
        restart: usize,
        iterations: usize,
        cluster_to_class: Vec<ClassLabel>,
    },
    Svm {
        weights: Vec<(String, f64)>,
        thresholds: (f64, f64),
        c: f64,
        epochs: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub month: YearMonth,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub month: YearMonth,
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub orders: Orders,
    #[serde(with = "crate::serde_f64::option")]
    pub aic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesReport {
    pub series: Vec<SeriesPoint>,
    pub interpolated_months: usize,
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    /// Last lag whose autocorrelation lies outside ±1.96/√n before the
    /// first one inside it (0 when lag 1 is already inside).
    pub acf_cutoff: usize,
    pub pacf_cutoff: usize,
    pub adf: AdfResult,
    pub orders: Orders,
    pub exogenous: Vec<String>,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub mean: Option<f64>,
    pub exogenous_coefficients: Vec<(String, f64)>,
    pub sigma2: f64,
    pub rmse: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub hqic: f64,
    pub k: usize,
    pub n_obs: usize,
    pub ljung_box: StatTestResult,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jarque_bera: StatTestResult,
    pub durbin_watson: f64,
    pub candidates: Vec<CandidateScore>,
    pub forecast_level: f64,
    /// Future exogenous inputs are held at their trailing 12-month mean.
    pub forecast: Vec<ForecastPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnSummary {
    pub attributes: Vec<String>,
    pub architecture: Vec<usize>,
    pub output_type: String,
    pub activation: String,
    pub optimizer: String,
    pub early_stopping: bool,
    pub validation_fraction: f64,
    pub n_train: usize,
    pub n_validation: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs_trained: usize,
    pub best_epoch: Option<usize>,
    /// `strictly decreasing`, `non-increasing` or `non-monotone`.
    pub loss_curve_type: String,
    pub loss_curve: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub test_accuracy: f64,
    pub accuracy_recent: Option<f64>,
    pub published_recent_accuracy: PublishedFigures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaccardRow {
    pub model: ModelKind,
    pub attributes: Vec<String>,
    pub attributes_recent: Vec<String>,
    pub intersection: usize,
    pub union: usize,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub movie: String,
    pub date_published: chrono::NaiveDate,
    /// `H`, `F` or `N`.
    pub truth: String,
    /// One cell per fitted model: `H`, `F`, `N` or [`MISSING_CELL`].
    pub cells: BTreeMap<ModelKind, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityRuling {
    pub model: ModelKind,
    pub valid: bool,
    pub reasons: Vec<String>,
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: DatasetSummary,
    pub recent: Option<RecentSummary>,
    pub seeds: Seeds,
    pub models: Vec<ModelRow>,
    pub wald: Option<WaldTable>,
    pub regression: RegressionTable,
    pub classification: Vec<ClassificationRow>,
    pub timeseries: Option<TimeseriesReport>,
    pub ann: Option<AnnSummary>,
    pub jaccard: Vec<JaccardRow>,
    /// Source of the per-movie rows: `validation` or `test_2020`.
    pub predictions_source: String,
    pub predictions: Vec<PredictionRow>,
    pub validity: Vec<ValidityRuling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    CsvBundle,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::CsvBundle),
            other => Err(format!("unknown format `{other}` (expected json, md or csv)")),
        }
    }
}

impl BenchReport {
    /// Canonical serialization, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Writes the report in `format` under `out_dir` (created if absent) and
/// returns the written paths.
pub fn emit_report(
    report: &BenchReport,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    match format {
        ReportFormat::Json => {
            let path = out_dir.join("report.json");
            write_file(&path, &report.to_json())?;
            Ok(vec![path])
        }
        ReportFormat::Markdown => {
            let path = out_dir.join("report.md");
            write_file(&path, &render_markdown(report))?;
            Ok(vec![path])
        }
        ReportFormat::CsvBundle => {
            let mut written = Vec::new();
            for (name, rows) in csv_tables(report) {
                let path = out_dir.join(name);
                write_csv(&path, &rows)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| io_error(path, std::io::Error::other(e.to_string())))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| io_error(path, std::io::Error::other(e.to_string())))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn test_cells(t: &Option<StatTestResult>) -> [String; 2] {
    match t {
        Some(t) => [num(t.statistic), opt(t.p_value)],
        None => [String::new(), String::new()],
    }
}

fn strings<const N: usize>(cells: [&str; N]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

fn csv_tables(r: &BenchReport) -> Vec<(&'static str, Vec<Vec<String>>)> {
    let mut out = Vec::new();

    let mut models = vec![strings([
        "model", "task", "n_features", "n_train", "n_test", "accuracy", "n_recent",
        "accuracy_recent", "valid", "reasons",
    ])];
    for m in &r.models {
        models.push(vec![
            m.model.label().into(),
            format!("{:?}", m.task).to_lowercase(),
            m.features.len().to_string(),
            m.n_train.to_string(),
            m.n_test.to_string(),
            num(m.accuracy),
            m.n_recent.map(|n| n.to_string()).unwrap_or_default(),
            opt(m.accuracy_recent),
            m.validity.as_ref().map(|v| v.valid.to_string()).unwrap_or_default(),
            m.validity.as_ref().map(|v| v.reasons.join("; ")).unwrap_or_default(),
        ]);
    }
    out.push(("models.csv", models));

    let mut wald = vec![strings(["term", "chi2", "p_value", "df"])];
    if let Some(w) = &r.wald {
        for t in &w.rows {
            wald.push(vec![t.name.clone(), num(t.statistic), opt(t.p_value), "1".into()]);
        }
    }
    out.push(("table1_wald.csv", wald));

    let mut reg = vec![strings([
        "model", "n", "p", "r2", "adjusted_r2", "f", "f_p", "durbin_watson", "jarque_bera",
        "jarque_bera_p", "lm", "lm_p", "accuracy", "valid",
    ])];
    for row in &r.regression.rows {
        let rep = &row.report;
        let [f, fp] = test_cells(&rep.f_statistic);
        let [jb, jbp] = test_cells(&rep.jarque_bera);
        let [lm, lmp] = test_cells(&rep.lagrange_multiplier);
        reg.push(vec![
            rep.model.clone(),
            rep.n.to_string(),
            rep.p.to_string(),
            num(rep.r2),
            num(rep.adjusted_r2),
            f,
            fp,
            rep.durbin_watson.as_ref().map(|t| num(t.statistic)).unwrap_or_default(),
            jb,
            jbp,
            lm,
            lmp,
            num(rep.accuracy),
            rep.validity.valid.to_string(),
        ]);
    }
    out.push(("table2_regression.csv", reg));

    let mut cls = vec![strings(["model", "silhouette", "accuracy"])];
    for c in &r.classification {
        cls.push(vec![c.model.label().into(), opt(c.silhouette), num(c.accuracy)]);
    }
    out.push(("table3_classification.csv", cls));

    let mut ts = vec![strings(["statistic", "value"])];
    if let Some(t) = &r.timeseries {
        for (k, v) in timeseries_rows(t) {
            ts.push(vec![k, v]);
        }
    }
    out.push(("table4_timeseries.csv", ts));

    let mut ann = vec![strings(["attribute", "value"])];
    if let Some(a) = &r.ann {
        for (k, v) in ann_rows(a) {
            ann.push(vec![k, v]);
        }
    }
    out.push(("table5_ann.csv", ann));

    let mut jac = vec![strings([
        "model", "attributes", "attributes_recent", "intersection", "union", "jaccard",
    ])];
    for j in &r.jaccard {
        jac.push(vec![
            j.model.label().into(),
            j.attributes.join(" "),
            j.attributes_recent.join(" "),
            j.intersection.to_string(),
            j.union.to_string(),
            num(j.index),
        ]);
    }
    out.push(("table6_jaccard.csv", jac));

    let columns = prediction_columns(r);
    let mut pred = vec![["movie".to_string(), "truth".to_string()]
        .into_iter()
        .chain(columns.iter().map(|m| m.label().to_string()))
        .collect::<Vec<_>>()];
    for p in &r.predictions {
        let mut row = vec![p.movie.clone(), p.truth.clone()];
        row.extend(columns.iter().map(|m| p.cells[m].clone()));
        pred.push(row);
    }
    out.push(("table7_predictions.csv", pred));

    let mut loss = vec![strings(["epoch", "loss"])];
    if let Some(a) = &r.ann {
        for (i, l) in a.loss_curve.iter().enumerate() {
            loss.push(vec![(i + 1).to_string(), num(*l)]);
        }
    }
    out.push(("loss_curve.csv", loss));

    let mut series = vec![strings(["month", "value"])];
    let mut fc = vec![strings(["month", "point", "low", "high"])];
    if let Some(t) = &r.timeseries {
        for p in &t.series {
            series.push(vec![p.month.to_string(), num(p.value)]);
        }
        for p in &t.forecast {
            fc.push(vec![p.month.to_string(), num(p.point), num(p.low), num(p.high)]);
        }
    }
    out.push(("monthly_metascore.csv", series));
    out.push(("forecast.csv", fc));
    out
}

fn prediction_columns(r: &BenchReport) -> Vec<ModelKind> {
    r.models.iter().map(|m| m.model).collect()
}

fn orders_label(o: &Orders) -> String {
    format!("({},{},{})x({},{},{},12)", o[0], o[1], o[2], o[3], o[4], o[5])
}

fn timeseries_rows(t: &TimeseriesReport) -> Vec<(String, String)> {
    let cutoff = |k: usize| format!("cuts off to 0 after lag {k}");
    vec![
        ("months".into(), t.series.len().to_string()),
        ("interpolated months".into(), t.interpolated_months.to_string()),
        ("autocorrelation".into(), cutoff(t.acf_cutoff)),
        ("partial autocorrelation".into(), cutoff(t.pacf_cutoff)),
        ("ADF statistic".into(), num(t.adf.test.statistic)),
        ("ADF p-value".into(), opt(t.adf.test.p_value)),
        ("ADF lags".into(), t.adf.lags.to_string()),
        ("selected model".into(), orders_label(&t.orders)),
        ("exogenous".into(), t.exogenous.join(" ")),
        ("RMSE".into(), num(t.rmse)),
        ("log-likelihood".into(), num(t.log_likelihood)),
        ("AIC".into(), num(t.aic)),
        ("BIC".into(), num(t.bic)),
        ("HQIC".into(), num(t.hqic)),
        ("parameters".into(), t.k.to_string()),
        ("observations".into(), t.n_obs.to_string()),
        ("Ljung-Box Q".into(), num(t.ljung_box.statistic)),
        ("Ljung-Box p-value".into(), opt(t.ljung_box.p_value)),
        ("skewness".into(), num(t.skewness)),
        ("kurtosis".into(), num(t.kurtosis)),
        ("Jarque-Bera".into(), num(t.jarque_bera.statistic)),
        ("Jarque-Bera p-value".into(), opt(t.jarque_bera.p_value)),
        ("Durbin-Watson".into(), num(t.durbin_watson)),
    ]
}

fn ann_rows(a: &AnnSummary) -> Vec<(String, String)> {
    let arch = a
        .architecture
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join("-");
    vec![
        ("attributes".into(), a.attributes.join(" ")),
        ("architecture".into(), arch),
        ("output type".into(), a.output_type.clone()),
        ("activation".into(), a.activation.clone()),
        ("optimizer".into(), a.optimizer.clone()),
        ("early stopping".into(), a.early_stopping.to_string()),
        ("validation fraction".into(), num(a.validation_fraction)),
        ("training examples".into(), a.n_train.to_string()),
        ("initial loss".into(), num(a.initial_loss)),
        ("final loss".into(), num(a.final_loss)),
        ("epochs trained".into(), a.epochs_trained.to_string()),
        ("loss curve type".into(), a.loss_curve_type.clone()),
        ("test accuracy".into(), num(a.test_accuracy)),
        ("2020 accuracy".into(), opt(a.accuracy_recent)),
        (
            "published 2020 accuracy (text / table)".into(),
            format!("{} / {}", a.published_recent_accuracy.text, a.published_recent_accuracy.table),
        ),
    ]
}

fn f4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        v.to_string()
    }
}

fn f4_opt(v: Option<f64>) -> String {
    v.map(f4).unwrap_or_else(|| MISSING_CELL.into())
}

fn md_row(out: &mut String, cells: &[String]) {
    let escaped: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
    let _ = writeln!(out, "| {} |", escaped.join(" | "));
}

fn md_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    md_row(out, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        md_row(out, r);
    }
    out.push('\n');
}

const NOT_RUN: &str = "_Not part of this run._\n\n";

/// Seven `## ` sections, one per table, after a short model overview.
pub fn render_markdown(r: &BenchReport) -> String {
    let mut out = String::from("# Movie success benchmark\n\n");
    let d = &r.dataset;
    let _ = writeln!(
        out,
        "Dataset `{}`: {} rows loaded, {} dropped, {} train / {} validation.\n",
        d.path.display(),
        d.rows_loaded,
        d.rows_dropped,
        d.train_rows,
        d.validation_rows
    );
    if let Some(rec) = &r.recent {
        let subs: Vec<String> = rec
            .substitutions
            .iter()
            .map(|(f, h)| format!("`{f}` read from `{h}`"))
            .collect();
        let _ = writeln!(
            out,
            "2020 holdout `{}`: {} rows. Substitutions: {}.\n",
            rec.path.display(),
            rec.rows_loaded,
            if subs.is_empty() { "none".into() } else { subs.join(", ") }
        );
    }
    let rows: Vec<Vec<String>> = r
        .models
        .iter()
        .map(|m| {
            vec![
                m.model.label().into(),
                format!("{:?}", m.task).to_lowercase(),
                m.n_train.to_string(),
                m.n_test.to_string(),
                f4(m.accuracy),
                f4_opt(m.accuracy_recent),
                match &m.validity {
                    Some(v) if v.valid => "valid".into(),
                    Some(v) => format!("invalid: {}", v.reasons.join(", ")),
                    None => MISSING_CELL.into(),
                },
            ]
        })
        .collect();
    md_table(
        &mut out,
        &["Model", "Task", "Train", "Test", "Accuracy", "2020 accuracy", "Validity"],
        &rows,
    );

    out.push_str("## Table 1: Wald tests for logistic regression\n\n");
    match &r.wald {
        Some(w) => {
            let rows: Vec<Vec<String>> = w
                .rows
                .iter()
                .map(|t| {
                    vec![
                        t.name.clone(),
                        f4(t.statistic),
                        t.p_value.map(|p| format!("{p:.6e}")).unwrap_or_default(),
                        "1".into(),
                    ]
                })
                .collect();
            md_table(&mut out, &["Term", "Chi²", "p-value", "df"], &rows);
            let _ = writeln!(
                out,
                "Pseudo R² {}, likelihood-ratio χ² {} (p = {}), converged: {}.\n",
                f4(w.pseudo_r2),
                f4(w.likelihood_ratio.statistic),
                w.likelihood_ratio.p_value.map(|p| format!("{p:.3e}")).unwrap_or_default(),
                w.converged
            );
        }
        None => out.push_str(NOT_RUN),
    }

    out.push_str("## Table 2: Regression diagnostics\n\n");
    if r.regression.rows.is_empty() {
        out.push_str(NOT_RUN);
    } else {
        let stat = |t: &Option<StatTestResult>| t.as_ref().map(|t| f4(t.statistic)).unwrap_or_default();
        let pval = |t: &Option<StatTestResult>| {
            t.as_ref()
                .and_then(|t| t.p_value)
                .map(|p| format!("{p:.3e}"))
                .unwrap_or_default()
        };
        let reports: Vec<&RegressionReport> = r.regression.rows.iter().map(|x| &x.report).collect();
        let line = |name: &str, f: &dyn Fn(&RegressionReport) -> String| {
            std::iter::once(name.to_string())
                .chain(reports.iter().map(|rep| f(rep)))
                .collect::<Vec<_>>()
        };
        let rows = vec![
            line("R²", &|x| f4(x.r2)),
            line("Adjusted R²", &|x| f4(x.adjusted_r2)),
            line("F-statistic", &|x| stat(&x.f_statistic)),
            line("F p-value", &|x| pval(&x.f_statistic)),
            line("Durbin-Watson", &|x| stat(&x.durbin_watson)),
            line("Jarque-Bera", &|x| stat(&x.jarque_bera)),
            line("Jarque-Bera p-value", &|x| pval(&x.jarque_bera)),
            line("LM statistic", &|x| stat(&x.lagrange_multiplier)),
            line("LM p-value", &|x| pval(&x.lagrange_multiplier)),
            line("Accuracy", &|x| f4(x.accuracy)),
            line("Valid", &|x| x.validity.valid.to_string()),
        ];
        let header: Vec<&str> = std::iter::once("Statistic")
            .chain(reports.iter().map(|x| x.model.as_str()))
            .collect();
        md_table(&mut out, &header, &rows);
        if let Some(s) = &r.regression.slr_screening {
            let _ = writeln!(out, "SLR regressor chosen by univariate R²: `{}`.\n", s.selected);
        }
    }

    out.push_str("## Table 3: Classification\n\n");
    if r.classification.is_empty() {
        out.push_str(NOT_RUN);
    } else {
        let header: Vec<&str> = std::iter::once("Statistic")
            .chain(r.classification.iter().map(|c| c.model.label()))
            .collect();
        let rows = vec![
            std::iter::once("Silhouette".to_string())
                .chain(r.classification.iter().map(|c| f4_opt(c.silhouette)))
                .collect(),
            std::iter::once("Accuracy".to_string())
                .chain(r.classification.iter().map(|c| f4(c.accuracy)))
                .collect(),
        ];
        md_table(&mut out, &header, &rows);
    }

    out.push_str("## Table 4: Time series\n\n");
    match &r.timeseries {
        Some(t) => {
            let rows: Vec<Vec<String>> = timeseries_rows(t).into_iter().map(|(k, v)| vec![k, v]).collect();
            md_table(&mut out, &["Statistic", "Value"], &rows);
        }
        None => out.push_str(NOT_RUN),
    }

    out.push_str("## Table 5: Neural network\n\n");
    match &r.ann {
        Some(a) => {
            let rows: Vec<Vec<String>> = ann_rows(a).into_iter().map(|(k, v)| vec![k, v]).collect();
            md_table(&mut out, &["Attribute", "Value"], &rows);
        }
        None => out.push_str(NOT_RUN),
    }

    out.push_str("## Table 6: Attribute availability\n\n");
    if r.jaccard.is_empty() {
        out.push_str(NOT_RUN);
    } else {
        let rows: Vec<Vec<String>> = r
            .jaccard
            .iter()
            .map(|j| {
                vec![
                    j.model.label().into(),
                    j.attributes.join(", "),
                    j.attributes_recent.join(", "),
                    format!("{}/{}={:.3}", j.intersection, j.union, j.index),
                ]
            })
            .collect();
        md_table(&mut out, &["Model", "Attributes", "Attributes 2020", "Jaccard"], &rows);
    }

    out.push_str("## Table 7: Per-movie predictions\n\n");
    if r.predictions.is_empty() {
        out.push_str(NOT_RUN);
    } else {
        let columns = prediction_columns(r);
        let header: Vec<&str> = ["Movie", "Truth"]
            .into_iter()
            .chain(columns.iter().map(|m| m.label()))
            .collect();
        let rows: Vec<Vec<String>> = r
            .predictions
            .iter()
            .map(|p| {
                [p.movie.clone(), p.truth.clone()]
                    .into_iter()
                    .chain(columns.iter().map(|m| p.cells[m].clone()))
                    .collect()
            })
            .collect();
        md_table(&mut out, &header, &rows);
        let _ = writeln!(out, "H = Hit, F = Flop, N = Neutral; rows from the {} set.", r.predictions_source);
    }
    out
}
