use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::KMEANS_DEFAULT_RESTARTS;
use crate::data::{Binner, ColumnMap, NumericField, YearWindow};
use crate::neural::TrainConfig;
use crate::timeseries::{default_grid, SarimaxSpec, EXOG_MEAN_DURATION, EXOG_MOVIE_COUNT};

use super::BenchError;

/// Environment variable that replaces every seed in a loaded config.
pub const SEED_ENV: &str = "CINESTAT_SEED";

/// The eight fitted models, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Slr,
    Mlr,
    #[serde(rename = "kmeans")]
    KMeans,
    Logistic,
    Ridge,
    Lasso,
    Svm,
    Ann,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Slr,
        ModelKind::Mlr,
        ModelKind::KMeans,
        ModelKind::Logistic,
        ModelKind::Ridge,
        ModelKind::Lasso,
        ModelKind::Svm,
        ModelKind::Ann,
    ];

    /// Column heading used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Slr => "SLR",
            ModelKind::Mlr => "MLR",
            ModelKind::KMeans => "KMeans",
            ModelKind::Logistic => "Logistic",
            ModelKind::Ridge => "Ridge",
            ModelKind::Lasso => "Lasso",
            ModelKind::Svm => "SVM",
            ModelKind::Ann => "ANN",
        }
    }

    pub fn is_regression(self) -> bool {
        matches!(
            self,
            ModelKind::Slr | ModelKind::Mlr | ModelKind::Ridge | ModelKind::Lasso
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn mlr_attributes() -> Vec<String> {
    names(&[
        "budget",
        "reviews_from_users",
        "reviews_from_critics",
        "top1000_voters_rating",
        "Action",
        "Animation",
        "Crime",
        "Drama",
        "Family",
        "Fantasy",
        "Horror",
        "Music",
        "Musical",
        "Mystery",
        "Sport",
        "Thriller",
    ])
}

fn classification_attributes() -> Vec<String> {
    names(&[
        "top1000_voters_rating",
        "Action",
        "Crime",
        "Drama",
        "Fantasy",
        "Mystery",
        "Romance",
        "Sport",
        "Thriller",
        "War",
    ])
}

fn ann_attributes() -> Vec<String> {
    names(&[
        "duration",
        "avg_vote",
        "Action",
        "Adventure",
        "Animation",
        "Biography",
        "Comedy",
        "Crime",
        "Drama",
        "Family",
        "Fantasy",
        "Horror",
        "Mystery",
        "Thriller",
    ])
}

/// Feature list per model. SLR picks its single regressor from
/// `slr_candidates` by univariate R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureLists {
    pub slr_candidates: Vec<String>,
    pub mlr: Vec<String>,
    pub logistic: Vec<String>,
    pub ridge: Vec<String>,
    pub lasso: Vec<String>,
    pub kmeans: Vec<String>,
    pub svm: Vec<String>,
    pub ann: Vec<String>,
}

impl Default for FeatureLists {
    fn default() -> Self {
        Self {
            slr_candidates: mlr_attributes(),
            mlr: mlr_attributes(),
            logistic: classification_attributes(),
            ridge: mlr_attributes(),
            lasso: mlr_attributes(),
            kmeans: classification_attributes(),
            svm: classification_attributes(),
            ann: ann_attributes(),
        }
    }
}

impl FeatureLists {
    /// Configured list; for SLR the candidate pool.
    pub fn get(&self, model: ModelKind) -> &[String] {
        match model {
            ModelKind::Slr => &self.slr_candidates,
            ModelKind::Mlr => &self.mlr,
            ModelKind::KMeans => &self.kmeans,
            ModelKind::Logistic => &self.logistic,
            ModelKind::Ridge => &self.ridge,
            ModelKind::Lasso => &self.lasso,
            ModelKind::Svm => &self.svm,
            ModelKind::Ann => &self.ann,
        }
    }
}

/// Attributes available for recent releases, compared against each model's
/// training attributes by Jaccard index.
pub fn default_recent_attributes() -> BTreeMap<ModelKind, Vec<String>> {
    BTreeMap::from([
        (
            ModelKind::Mlr,
            names(&["duration", "Action", "Animation", "Biography", "Drama", "Horror"]),
        ),
        (
            ModelKind::Logistic,
            names(&["avg_vote", "Action", "Crime", "Fantasy", "Mystery"]),
        ),
        (
            ModelKind::Svm,
            names(&["avg_vote", "Action", "Crime", "Drama", "Fantasy", "Mystery", "Thriller"]),
        ),
    ])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub kmeans: u64,
    pub svm: u64,
    pub mlp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50 }
    }
}

/// Hidden layer widths plus optimizer settings; the optimizer seed is
/// replaced by `seeds.mlp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100],
            train: TrainConfig::default(),
        }
    }
}

/// `(p, d, q, P, D, Q)` with seasonal period 12.
pub type Orders = [usize; 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeseriesConfig {
    pub enabled: bool,
    pub grid: Vec<Orders>,
    pub exogenous: Vec<String>,
    pub horizon: usize,
    pub level: f64,
    /// Lags shown for the ACF and PACF.
    pub max_lag: usize,
}

impl Default for TimeseriesConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            grid: default_grid().iter().map(SarimaxSpec::key).collect(),
            exogenous: vec![EXOG_MEAN_DURATION.into(), EXOG_MOVIE_COUNT.into()],
            horizon: 12,
            level: 0.95,
            max_lag: 24,
        }
    }
}

impl TimeseriesConfig {
    pub fn specs(&self) -> Vec<SarimaxSpec> {
        self.grid
            .iter()
            .map(|o| {
                SarimaxSpec::new((o[0], o[1], o[2]), (o[3], o[4], o[5]))
                    .with_exogenous(self.exogenous.iter().cloned())
            })
            .collect()
    }
}

/// Second evaluation table of recent releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecentSlot {
    pub path: PathBuf,
    #[serde(default)]
    pub column_map: ColumnMap,
    /// Field name → header read in its place. Every entry is echoed in the
    /// report as a substitution.
    #[serde(default)]
    pub rename: BTreeMap<String, String>,
}

/// Full pipeline configuration. Every field has a default except the
/// dataset path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub column_map: ColumnMap,
    pub test_2020: Option<RecentSlot>,
    pub models: Vec<ModelKind>,
    pub features: FeatureLists,
    pub recent_attributes: BTreeMap<ModelKind, Vec<String>>,
    pub thresholds: Binner,
    pub split: YearWindow,
    pub seeds: Seeds,
    pub ridge_lambda: f64,
    pub lasso_lambda: f64,
    pub kmeans_restarts: usize,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
    /// Lag order of the Breusch-Godfrey test.
    pub lm_lags: usize,
    /// Silhouettes use at most this many training points.
    pub silhouette_max_points: usize,
    /// Most recent test movies listed per model.
    pub prediction_rows: usize,
    pub timeseries: TimeseriesConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            column_map: ColumnMap::default(),
            test_2020: None,
            models: ModelKind::ALL.to_vec(),
            features: FeatureLists::default(),
            recent_attributes: default_recent_attributes(),
            thresholds: Binner::default(),
            split: YearWindow::default(),
            seeds: Seeds::default(),
            ridge_lambda: 1150.0,
            lasso_lambda: 0.145,
            kmeans_restarts: KMEANS_DEFAULT_RESTARTS,
            svm: SvmConfig::default(),
            mlp: MlpConfig::default(),
            lm_lags: 10,
            silhouette_max_points: 2000,
            prediction_rows: 10,
            timeseries: TimeseriesConfig::default(),
            output_dir: None,
        }
    }
}

fn config_error(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

/// Points a field of the column map at another header.
pub(crate) fn remap_column(map: &mut ColumnMap, field: &str, header: &str) -> Result<(), BenchError> {
    let slot = match field {
        "title" => &mut map.title,
        "year" => &mut map.year,
        "date_published" => &mut map.date_published,
        "duration" => &mut map.duration,
        "avg_vote" => &mut map.avg_vote,
        "votes" => &mut map.votes,
        "top1000_voters_rating" => &mut map.top1000_voters_rating,
        "budget" => &mut map.budget,
        "reviews_from_users" => &mut map.reviews_from_users,
        "reviews_from_critics" => &mut map.reviews_from_critics,
        "genre" => &mut map.genre,
        "metascore" => &mut map.metascore,
        other => return Err(config_error(format!("cannot rename unknown field `{other}`"))),
    };
    *slot = header.to_string();
    Ok(())
}

impl RunConfig {
    /// Parses a JSON config; relative paths resolve against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| config_error(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dataset);
        if let Some(slot) = &mut self.test_2020 {
            join(&mut slot.path);
        }
        if let Some(out) = &mut self.output_dir {
            join(out);
        }
    }

    /// Replaces every seed with `value`.
    pub fn override_seeds(&mut self, value: u64) {
        self.seeds = Seeds {
            kmeans: value,
            svm: value,
            mlp: value,
        };
    }

    /// Applies [`SEED_ENV`] when set; a value that is not a `u64` is a config error.
    pub fn apply_seed_env(&mut self) -> Result<(), BenchError> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                let seed = v
                    .trim()
                    .parse()
                    .map_err(|_| config_error(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
                self.override_seeds(seed);
                Ok(())
            }
            Err(_) => Ok(()),
        }
    }

    /// Models to fit, deduplicated and in report order.
    pub fn selected_models(&self) -> Vec<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .filter(|m| self.models.contains(m))
            .collect()
    }

    /// Checks everything that does not need the data. Genre names are
    /// checked against the vocabulary after ingestion.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.dataset.as_os_str().is_empty() {
            return Err(config_error("`dataset` is required"));
        }
        if self.models.is_empty() && !self.timeseries.enabled {
            return Err(config_error("nothing to run: no models and time series disabled"));
        }
        self.thresholds.validate().map_err(|e| config_error(e.to_string()))?;
        if self.split.first_train_year > self.split.last_train_year {
            return Err(config_error("split: first_train_year after last_train_year"));
        }
        for (what, v) in [("ridge_lambda", self.ridge_lambda), ("lasso_lambda", self.lasso_lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.svm.c > 0.0 && self.svm.c.is_finite()) || self.svm.epochs == 0 {
            return Err(config_error("svm: C must be positive and epochs at least 1"));
        }
        if self.mlp.hidden.iter().any(|&h| h == 0) {
            return Err(config_error("mlp: hidden layer widths must be positive"));
        }
        self.mlp.train.validate().map_err(|e| config_error(format!("mlp: {e}")))?;
        if self.kmeans_restarts == 0 || self.lm_lags == 0 || self.silhouette_max_points < 2 {
            return Err(config_error(
                "kmeans_restarts and lm_lags must be positive, silhouette_max_points at least 2",
            ));
        }
        for model in self.selected_models() {
            let list = self.features.get(model);
            if list.is_empty() {
                return Err(config_error(format!("{model}: empty feature list")));
            }
            let mut seen = std::collections::BTreeSet::new();
            for f in list {
                if NumericField::from_name(f) == Some(NumericField::Metascore) {
                    return Err(config_error(format!("{model}: the target cannot be a feature")));
                }
                if !seen.insert(f) {
                    return Err(config_error(format!("{model}: duplicate feature `{f}`")));
                }
            }
        }
        for (model, list) in &self.recent_attributes {
            if list.is_empty() {
                return Err(config_error(format!("recent_attributes.{model}: empty list")));
            }
        }
        let ts = &self.timeseries;
        if ts.enabled {
            if ts.grid.is_empty() {
                return Err(config_error("timeseries.grid is empty"));
            }
            for spec in ts.specs() {
                spec.validate().map_err(|e| config_error(format!("timeseries: {e}")))?;
            }
            if !(ts.level > 0.0 && ts.level < 1.0) {
                return Err(config_error("timeseries.level must lie in (0, 1)"));
            }
            for e in &ts.exogenous {
                if e != EXOG_MEAN_DURATION && e != EXOG_MOVIE_COUNT {
                    return Err(config_error(format!(
                        "unknown exogenous series `{e}` (available: {EXOG_MEAN_DURATION}, {EXOG_MOVIE_COUNT})"
                    )));
                }
            }
            if ts.max_lag == 0 {
                return Err(config_error("timeseries.max_lag must be positive"));
            }
        }
        if let Some(slot) = &self.test_2020 {
            let mut map = slot.column_map.clone();
            for (field, header) in &slot.rename {
                remap_column(&mut map, field, header)?;
            }
        }
        Ok(())
    }
}
