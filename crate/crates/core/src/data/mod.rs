//! Movie dataset ingestion and preprocessing.
//!
//! Loads delimiter-separated movie tables, binarizes genre sets, bins
//! metascores into Flop/Neutral/Hit, splits by release year and assembles
//! complete-case design matrices.

mod load;

pub use load::{load_movies, ColumnMap, LoadReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::Matrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited file {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("header lacks mandatory column `{column}` (mapped from field `{field}`)")]
    MissingColumn { field: &'static str, column: String },
    #[error("no parseable rows ({dropped} dropped)")]
    NoParseableRows { dropped: usize },
    #[error("record list is empty")]
    EmptyRecords,
    #[error("record {index} has no genres")]
    NoGenres { index: usize },
    #[error("metascore {0} outside [0, 100]")]
    ScoreOutOfRange(i64),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("no rows survive complete-case filtering for target `{target}`")]
    NoSurvivingRows { target: String },
    #[error("invalid bin thresholds: flop below {flop_below}, hit from {hit_from}")]
    InvalidThresholds { flop_below: f64, hit_from: f64 },
}

/// One movie row after parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRecord {
    pub title: String,
    pub year: i32,
    pub date_published: NaiveDate,
    pub duration: u32,
    pub avg_vote: f64,
    pub votes: u64,
    pub top1000_voters_rating: Option<f64>,
    pub budget: Option<f64>,
    pub reviews_from_users: Option<f64>,
    pub reviews_from_critics: Option<f64>,
    pub genres: BTreeSet<String>,
    pub metascore: Option<u8>,
}

impl MovieRecord {
    /// Checks the record-level invariants enforced at ingestion.
    pub fn is_valid(&self) -> bool {
        self.duration > 0
            && (0.0..=10.0).contains(&self.avg_vote)
            && self
                .top1000_voters_rating
                .is_none_or(|r| (0.0..=10.0).contains(&r))
            && self.metascore.is_none_or(|m| m <= 100)
            && !self.genres.is_empty()
            && self.date_published.year() == self.year
    }

    pub fn numeric(&self, field: NumericField) -> Option<f64> {
        match field {
            NumericField::Year => Some(f64::from(self.year)),
            NumericField::Duration => Some(f64::from(self.duration)),
            NumericField::AvgVote => Some(self.avg_vote),
            NumericField::Votes => Some(self.votes as f64),
            NumericField::Top1000VotersRating => self.top1000_voters_rating,
            NumericField::Budget => self.budget,
            NumericField::ReviewsFromUsers => self.reviews_from_users,
            NumericField::ReviewsFromCritics => self.reviews_from_critics,
            NumericField::Metascore => self.metascore.map(f64::from),
        }
    }

    pub fn set_numeric(&mut self, field: NumericField, value: Option<f64>) {
        match field {
            NumericField::Year => {
                if let Some(v) = value {
                    self.year = v as i32;
                }
            }
            NumericField::Duration => {
                if let Some(v) = value {
                    self.duration = v as u32;
                }
            }
            NumericField::AvgVote => {
                if let Some(v) = value {
                    self.avg_vote = v;
                }
            }
            NumericField::Votes => {
                if let Some(v) = value {
                    self.votes = v as u64;
                }
            }
            NumericField::Top1000VotersRating => self.top1000_voters_rating = value,
            NumericField::Budget => self.budget = value,
            NumericField::ReviewsFromUsers => self.reviews_from_users = value,
            NumericField::ReviewsFromCritics => self.reviews_from_critics = value,
            NumericField::Metascore => self.metascore = value.map(|v| v.round() as u8),
        }
    }
}

/// Numeric attributes usable as features or targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericField {
    Year,
    Duration,
    AvgVote,
    Votes,
    Top1000VotersRating,
    Budget,
    ReviewsFromUsers,
    ReviewsFromCritics,
    Metascore,
}

impl NumericField {
    pub const ALL: [NumericField; 9] = [
        NumericField::Year,
        NumericField::Duration,
        NumericField::AvgVote,
        NumericField::Votes,
        NumericField::Top1000VotersRating,
        NumericField::Budget,
        NumericField::ReviewsFromUsers,
        NumericField::ReviewsFromCritics,
        NumericField::Metascore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NumericField::Year => "year",
            NumericField::Duration => "duration",
            NumericField::AvgVote => "avg_vote",
            NumericField::Votes => "votes",
            NumericField::Top1000VotersRating => "top1000_voters_rating",
            NumericField::Budget => "budget",
            NumericField::ReviewsFromUsers => "reviews_from_users",
            NumericField::ReviewsFromCritics => "reviews_from_critics",
            NumericField::Metascore => "metascore",
        }
    }

    /// Parses a canonical field name; a few spelling variants seen in the
    /// wild are accepted.
    pub fn from_name(name: &str) -> Option<Self> {
        let field = match name {
            "year" => NumericField::Year,
            "duration" => NumericField::Duration,
            "avg_vote" => NumericField::AvgVote,
            "votes" => NumericField::Votes,
            "top1000_voters_rating" | "top1000_voters_ratings" => NumericField::Top1000VotersRating,
            "budget" => NumericField::Budget,
            "reviews_from_users" => NumericField::ReviewsFromUsers,
            "reviews_from_critics" | "review_from_critics" => NumericField::ReviewsFromCritics,
            "metascore" => NumericField::Metascore,
            _ => return None,
        };
        Some(field)
    }
}

impl fmt::Display for NumericField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ternary success class, ordered Flop < Neutral < Hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Flop,
    Neutral,
    Hit,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Flop, ClassLabel::Neutral, ClassLabel::Hit];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Single-letter code: F, N or H.
    pub fn code(self) -> char {
        match self {
            ClassLabel::Flop => 'F',
            ClassLabel::Neutral => 'N',
            ClassLabel::Hit => 'H',
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Metascore cutoffs: Flop below `flop_below`, Hit from `hit_from` upward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binner {
    pub flop_below: f64,
    pub hit_from: f64,
}

impl Default for Binner {
    fn default() -> Self {
        Self {
            flop_below: 40.0,
            hit_from: 60.0,
        }
    }
}

impl Binner {
    pub fn new(flop_below: f64, hit_from: f64) -> Result<Self, DataError> {
        let b = Self {
            flop_below,
            hit_from,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let ok = self.flop_below.is_finite()
            && self.hit_from.is_finite()
            && 0.0 < self.flop_below
            && self.flop_below <= self.hit_from
            && self.hit_from <= 100.0;
        if ok {
            Ok(())
        } else {
            Err(DataError::InvalidThresholds {
                flop_below: self.flop_below,
                hit_from: self.hit_from,
            })
        }
    }

    /// Bins a continuous score, clamping it to [0, 100] first.
    pub fn label(&self, score: f64) -> ClassLabel {
        let s = if score.is_nan() {
            0.0
        } else {
            score.clamp(0.0, 100.0)
        };
        if s < self.flop_below {
            ClassLabel::Flop
        } else if s < self.hit_from {
            ClassLabel::Neutral
        } else {
            ClassLabel::Hit
        }
    }

    pub fn bin(&self, score: i64) -> Result<ClassLabel, DataError> {
        check_score(score)?;
        Ok(self.label(score as f64))
    }

    pub fn success(&self, score: i64) -> Result<bool, DataError> {
        check_score(score)?;
        Ok(score as f64 >= self.hit_from)
    }
}

fn check_score(score: i64) -> Result<(), DataError> {
    if (0..=100).contains(&score) {
        Ok(())
    } else {
        Err(DataError::ScoreOutOfRange(score))
    }
}

/// Bins a metascore with the default 40/60 cutoffs.
pub fn bin_metascore(score: i64) -> Result<ClassLabel, DataError> {
    Binner::default().bin(score)
}

/// True iff the metascore reaches the Hit cutoff (60).
pub fn binarize_success(score: i64) -> Result<bool, DataError> {
    Binner::default().success(score)
}

/// Genre vocabulary plus the n×g indicator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreEncoding {
    pub vocabulary: Vec<String>,
    pub matrix: Matrix,
}

impl GenreEncoding {
    /// Recovers the genre set of row `i`.
    pub fn decode(&self, i: usize) -> BTreeSet<String> {
        self.matrix
            .row(i)
            .iter()
            .zip(&self.vocabulary)
            .filter(|(v, _)| **v == 1.0)
            .map(|(_, g)| g.clone())
            .collect()
    }
}

/// Sorted union of all genres.
pub fn genre_vocabulary(records: &[MovieRecord]) -> Vec<String> {
    records
        .iter()
        .flat_map(|r| r.genres.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Multi-label binarization of the genre sets.
pub fn binarize_multilabel(records: &[MovieRecord]) -> Result<GenreEncoding, DataError> {
    if records.is_empty() {
        return Err(DataError::EmptyRecords);
    }
    if let Some(index) = records.iter().position(|r| r.genres.is_empty()) {
        return Err(DataError::NoGenres { index });
    }
    let vocabulary = genre_vocabulary(records);
    let column: BTreeMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(j, g)| (g.as_str(), j))
        .collect();
    let mut matrix = Matrix::zeros(records.len(), vocabulary.len());
    for (i, r) in records.iter().enumerate() {
        for g in &r.genres {
            matrix[(i, column[g.as_str()])] = 1.0;
        }
    }
    Ok(GenreEncoding { vocabulary, matrix })
}

/// Inclusive training window and validation cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub first_train_year: i32,
    pub last_train_year: i32,
}

impl Default for YearWindow {
    fn default() -> Self {
        Self {
            first_train_year: 1990,
            last_train_year: 2015,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct YearSplit {
    pub train: Vec<MovieRecord>,
    pub validation: Vec<MovieRecord>,
    /// Records released before the training window.
    pub excluded: usize,
}

impl YearWindow {
    pub fn split(&self, records: &[MovieRecord]) -> YearSplit {
        let mut out = YearSplit::default();
        for r in records {
            if r.year < self.first_train_year {
                out.excluded += 1;
            } else if r.year <= self.last_train_year {
                out.train.push(r.clone());
            } else {
                out.validation.push(r.clone());
            }
        }
        out
    }
}

/// Train on 1990–2015, validate on everything later, drop the rest.
pub fn split_by_year(records: &[MovieRecord]) -> YearSplit {
    YearWindow::default().split(records)
}

/// A resolved design-matrix column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feature {
    Numeric(NumericField),
    Genre(String),
}

impl Feature {
    pub fn resolve(name: &str, vocabulary: &[String]) -> Result<Self, DataError> {
        if let Some(field) = NumericField::from_name(name) {
            return Ok(Feature::Numeric(field));
        }
        if vocabulary.iter().any(|g| g == name) {
            return Ok(Feature::Genre(name.to_string()));
        }
        Err(DataError::UnknownFeature(name.to_string()))
    }

    pub fn value(&self, record: &MovieRecord) -> Option<f64> {
        match self {
            Feature::Numeric(f) => record.numeric(*f),
            Feature::Genre(g) => Some(if record.genres.contains(g) { 1.0 } else { 0.0 }),
        }
    }
}

/// Extracts one feature row; `None` if any selected value is missing.
pub fn feature_row(record: &MovieRecord, features: &[Feature]) -> Option<Vec<f64>> {
    features
        .iter()
        .map(|f| f.value(record).filter(|v| v.is_finite()))
        .collect()
}

/// Named numeric feature matrix paired with a target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    pub values: Matrix,
    pub target: Vec<f64>,
    pub target_name: String,
    /// Index of each row in the record slice it was built from.
    pub source_rows: Vec<usize>,
}

impl DesignMatrix {
    pub fn new(
        column_names: Vec<String>,
        values: Matrix,
        target: Vec<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self, DataError> {
        assert_eq!(
            column_names.len(),
            values.cols(),
            "column count != name count"
        );
        assert_eq!(values.rows(), target.len(), "row count != target length");
        assert!(values.is_finite(), "non-finite design entry");
        let source_rows = (0..values.rows()).collect();
        Ok(Self {
            column_names,
            values,
            target,
            target_name: target_name.into(),
            source_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    /// Replaces the target with a transformed copy.
    pub fn map_target(&self, name: impl Into<String>, f: impl Fn(f64) -> f64) -> DesignMatrix {
        DesignMatrix {
            target: self.target.iter().map(|&v| f(v)).collect(),
            target_name: name.into(),
            ..self.clone()
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<DesignMatrix, DataError> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| DataError::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DesignMatrix {
            column_names: names.to_vec(),
            values: self.values.select_columns(&idx),
            ..self.clone()
        })
    }
}

/// Complete-case design matrix using the records' own genre vocabulary.
pub fn build_design_matrix(
    records: &[MovieRecord],
    feature_names: &[String],
    target_name: &str,
) -> Result<DesignMatrix, DataError> {
    let vocabulary = genre_vocabulary(records);
    build_design_matrix_with(records, feature_names, target_name, &vocabulary)
}

/// Complete-case design matrix against a fixed genre vocabulary.
pub fn build_design_matrix_with(
    records: &[MovieRecord],
    feature_names: &[String],
    target_name: &str,
    vocabulary: &[String],
) -> Result<DesignMatrix, DataError> {
    let features = feature_names
        .iter()
        .map(|n| Feature::resolve(n, vocabulary))
        .collect::<Result<Vec<_>, _>>()?;
    let target = NumericField::from_name(target_name)
        .ok_or_else(|| DataError::UnknownTarget(target_name.to_string()))?;

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut source_rows = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let Some(t) = r.numeric(target).filter(|v| v.is_finite()) else {
            continue;
        };
        let Some(row) = feature_row(r, &features) else {
            continue;
        };
        data.extend(row);
        y.push(t);
        source_rows.push(i);
    }
    if y.is_empty() {
        return Err(DataError::NoSurvivingRows {
            target: target_name.to_string(),
        });
    }
    let values = Matrix::from_vec(y.len(), features.len(), data).expect("row width fixed");
    Ok(DesignMatrix {
        column_names: feature_names.to_vec(),
        values,
        target: y,
        target_name: target_name.to_string(),
        source_rows,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn record(
        title: &str,
        year: i32,
        genres: &[&str],
        metascore: Option<u8>,
    ) -> MovieRecord {
        MovieRecord {
            title: title.to_string(),
            year,
            date_published: NaiveDate::from_ymd_opt(year, 6, 1).unwrap(),
            duration: 100,
            avg_vote: 6.5,
            votes: 1000,
            top1000_voters_rating: Some(6.0),
            budget: None,
            reviews_from_users: Some(10.0),
            reviews_from_critics: Some(5.0),
            genres: genres.iter().map(|g| g.to_string()).collect(),
            metascore,
        }
    }

    #[test]
    fn binarize_marks_member_genres() {
        let recs = vec![
            record("a", 2000, &["Action", "Drama"], None),
            record("b", 2000, &["Comedy"], None),
        ];
        let enc = binarize_multilabel(&recs).unwrap();
        assert_eq!(enc.vocabulary, vec!["Action", "Comedy", "Drama"]);
        assert_eq!(enc.matrix.row(0), &[1.0, 0.0, 1.0]);
        assert_eq!(enc.matrix.row(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn binarize_single_record() {
        let enc = binarize_multilabel(&[record("a", 2000, &["Drama"], None)]).unwrap();
        assert_eq!(enc.matrix.shape(), (1, 1));
        assert_eq!(enc.matrix.row(0), &[1.0]);
    }

    #[test]
    fn binarize_identical_sets_identical_rows() {
        let recs = vec![
            record("a", 2000, &["Drama", "War"], None),
            record("b", 2001, &["War", "Drama"], None),
            record("c", 2001, &["Comedy"], None),
        ];
        let enc = binarize_multilabel(&recs).unwrap();
        assert_eq!(enc.matrix.row(0), enc.matrix.row(1));
    }

    #[test]
    fn binarize_errors() {
        assert!(matches!(
            binarize_multilabel(&[]),
            Err(DataError::EmptyRecords)
        ));
        let r = record("a", 2000, &[], None);
        assert!(matches!(
            binarize_multilabel(&[r]),
            Err(DataError::NoGenres { index: 0 })
        ));
    }

    #[test]
    fn metascore_bins() {
        assert_eq!(bin_metascore(30).unwrap(), ClassLabel::Flop);
        assert_eq!(bin_metascore(39).unwrap(), ClassLabel::Flop);
        assert_eq!(bin_metascore(40).unwrap(), ClassLabel::Neutral);
        assert_eq!(bin_metascore(60).unwrap(), ClassLabel::Hit);
        assert_eq!(bin_metascore(75).unwrap(), ClassLabel::Hit);
        assert!(bin_metascore(101).is_err());
        assert!(bin_metascore(-1).is_err());
    }

    #[test]
    fn success_threshold() {
        assert!(binarize_success(60).unwrap());
        assert!(!binarize_success(59).unwrap());
        assert!(!binarize_success(0).unwrap());
        assert!(binarize_success(200).is_err());
    }

    #[test]
    fn thresholds_validated() {
        assert!(Binner::new(60.0, 40.0).is_err());
        assert!(Binner::new(0.0, 40.0).is_err());
        assert!(Binner::new(40.0, 60.0).is_ok());
    }

    #[test]
    fn year_split_rule() {
        let recs = vec![
            record("a", 2015, &["Drama"], None),
            record("b", 2016, &["Drama"], None),
            record("c", 1989, &["Drama"], None),
            record("d", 1990, &["Drama"], None),
        ];
        let split = split_by_year(&recs);
        let titles = |v: &[MovieRecord]| v.iter().map(|r| r.title.clone()).collect::<Vec<_>>();
        assert_eq!(titles(&split.train), vec!["a", "d"]);
        assert_eq!(titles(&split.validation), vec!["b"]);
        assert_eq!(split.excluded, 1);
    }

    #[test]
    fn design_matrix_complete_case() {
        let mut recs = vec![
            record("a", 2000, &["Drama"], Some(50)),
            record("b", 2000, &["Action"], Some(70)),
            record("c", 2000, &["Drama"], Some(20)),
        ];
        recs[0].budget = Some(1e6);
        recs[1].budget = Some(2e6);
        let names = vec!["budget".to_string(), "Drama".to_string()];
        let dm = build_design_matrix(&recs, &names, "metascore").unwrap();
        assert_eq!(dm.n_rows(), 2);
        assert_eq!(dm.source_rows, vec![0, 1]);
        assert_eq!(dm.values.row(1), &[2e6, 0.0]);
        assert_eq!(dm.target, vec![50.0, 70.0]);
    }

    #[test]
    fn design_matrix_genre_only_is_binary() {
        let recs = vec![
            record("a", 2000, &["Drama", "War"], Some(50)),
            record("b", 2000, &["Action"], Some(70)),
        ];
        let names: Vec<String> = ["Action", "Drama", "War"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let dm = build_design_matrix(&recs, &names, "metascore").unwrap();
        assert!(dm.values.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn design_matrix_errors() {
        let recs = vec![record("a", 2000, &["Drama"], None)];
        let names = vec!["duration".to_string()];
        assert!(matches!(
            build_design_matrix(&recs, &names, "metascore"),
            Err(DataError::NoSurvivingRows { .. })
        ));
        let bad = vec!["Western".to_string()];
        assert!(matches!(
            build_design_matrix(&recs, &bad, "metascore"),
            Err(DataError::UnknownFeature(_))
        ));
    }

    fn arb_record() -> impl Strategy<Value = MovieRecord> {
        let genres = prop::collection::btree_set(
            prop::sample::select(vec!["Action", "Comedy", "Drama", "Horror", "War"]),
            1..4,
        );
        (
            1970i32..2022,
            genres,
            prop::option::of(0u8..=100),
            prop::option::of(0.0f64..1e8),
        )
            .prop_map(|(year, g, m, budget)| {
                let mut r = record("x", year, &[], m);
                r.genres = g.into_iter().map(String::from).collect();
                r.budget = budget;
                r
            })
    }

    proptest! {
        #[test]
        fn binarize_decodes_back(recs in prop::collection::vec(arb_record(), 1..30)) {
            let enc = binarize_multilabel(&recs).unwrap();
            for (i, r) in recs.iter().enumerate() {
                prop_assert_eq!(&enc.decode(i), &r.genres);
            }
        }

        #[test]
        fn binning_is_monotone(a in 0i64..=100, b in 0i64..=100) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(bin_metascore(lo).unwrap() <= bin_metascore(hi).unwrap());
        }

        #[test]
        fn split_partitions_recent_records(recs in prop::collection::vec(arb_record(), 0..40)) {
            let split = split_by_year(&recs);
            let recent = recs.iter().filter(|r| r.year >= 1990).count();
            prop_assert_eq!(split.train.len() + split.validation.len(), recent);
            prop_assert!(split.train.iter().all(|r| r.year <= 2015));
            prop_assert!(split.validation.iter().all(|r| r.year > 2015));
        }

        #[test]
        fn design_matrix_is_finite(recs in prop::collection::vec(arb_record(), 1..40)) {
            let names: Vec<String> = ["budget", "duration", "Drama"].iter().map(|s| s.to_string()).collect();
            let vocab: Vec<String> = ["Action", "Comedy", "Drama", "Horror", "War"].iter().map(|s| s.to_string()).collect();
            if let Ok(dm) = build_design_matrix_with(&recs, &names, "metascore", &vocab) {
                prop_assert!(dm.values.is_finite());
                prop_assert_eq!(dm.values.rows(), dm.target.len());
            }
        }
    }
}
