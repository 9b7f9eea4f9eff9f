use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{DataError, MovieRecord};

/// Maps record fields onto header names of the input file.
///
/// Defaults follow the column names of the public IMDb movies table, with
/// the top-1000-voter rating joined in from the ratings table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub title: String,
    pub year: String,
    pub date_published: String,
    pub duration: String,
    pub avg_vote: String,
    pub votes: String,
    pub top1000_voters_rating: String,
    pub budget: String,
    pub reviews_from_users: String,
    pub reviews_from_critics: String,
    pub genre: String,
    pub metascore: String,
    /// Field delimiter, a single ASCII character.
    pub delimiter: char,
    /// Separator between genres inside the genre cell.
    pub genre_separator: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            title: "title".into(),
            year: "year".into(),
            date_published: "date_published".into(),
            duration: "duration".into(),
            avg_vote: "avg_vote".into(),
            votes: "votes".into(),
            top1000_voters_rating: "top1000_voters_rating".into(),
            budget: "budget".into(),
            reviews_from_users: "reviews_from_users".into(),
            reviews_from_critics: "reviews_from_critics".into(),
            genre: "genre".into(),
            metascore: "metascore".into(),
            delimiter: ',',
            genre_separator: ",".into(),
        }
    }
}

/// Parsed records plus bookkeeping on rejected rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub records: Vec<MovieRecord>,
    pub dropped: usize,
    /// Drop count per reason.
    pub drop_reasons: BTreeMap<String, usize>,
}

struct Columns {
    title: usize,
    year: usize,
    date_published: usize,
    duration: usize,
    avg_vote: usize,
    votes: usize,
    genre: usize,
    top1000: Option<usize>,
    budget: Option<usize>,
    reviews_users: Option<usize>,
    reviews_critics: Option<usize>,
    metascore: Option<usize>,
}

fn find(header: &csv::StringRecord, name: &str) -> Option<usize> {
    header.iter().position(|h| h.trim() == name)
}

impl Columns {
    fn resolve(header: &csv::StringRecord, map: &ColumnMap) -> Result<Self, DataError> {
        let req = |field: &'static str, name: &str| {
            find(header, name).ok_or_else(|| DataError::MissingColumn {
                field,
                column: name.to_string(),
            })
        };
        Ok(Self {
            title: req("title", &map.title)?,
            year: req("year", &map.year)?,
            date_published: req("date_published", &map.date_published)?,
            duration: req("duration", &map.duration)?,
            avg_vote: req("avg_vote", &map.avg_vote)?,
            votes: req("votes", &map.votes)?,
            genre: req("genre", &map.genre)?,
            top1000: find(header, &map.top1000_voters_rating),
            budget: find(header, &map.budget),
            reviews_users: find(header, &map.reviews_from_users),
            reviews_critics: find(header, &map.reviews_from_critics),
            metascore: find(header, &map.metascore),
        })
    }
}

/// Cell values treated as missing.
fn is_missing(s: &str) -> bool {
    matches!(
        s.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "n/a" | "nan" | "null" | "none" | "-"
    )
}

/// Strips a leading currency code or symbol and thousands separators.
fn parse_amount(s: &str) -> Option<f64> {
    let start = s.find(|c: char| c.is_ascii_digit())?;
    let cleaned: String = s[start..]
        .chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

enum Optional {
    Absent,
    Value(f64),
    Invalid,
}

fn optional(
    row: &csv::StringRecord,
    col: Option<usize>,
    parse: impl Fn(&str) -> Option<f64>,
) -> Optional {
    let Some(cell) = col.and_then(|c| row.get(c)) else {
        return Optional::Absent;
    };
    if is_missing(cell) {
        return Optional::Absent;
    }
    match parse(cell.trim()) {
        Some(v) => Optional::Value(v),
        // Unparseable optional cells count as missing.
        None => Optional::Absent,
    }
    .validate()
}

impl Optional {
    fn validate(self) -> Self {
        match self {
            Optional::Value(v) if !v.is_finite() => Optional::Invalid,
            other => other,
        }
    }

    fn within(self, lo: f64, hi: f64) -> Result<Option<f64>, ()> {
        match self {
            Optional::Absent => Ok(None),
            Optional::Value(v) if (lo..=hi).contains(&v) => Ok(Some(v)),
            _ => Err(()),
        }
    }
}

fn parse_row(
    row: &csv::StringRecord,
    cols: &Columns,
    map: &ColumnMap,
) -> Result<MovieRecord, &'static str> {
    let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("");

    let title = cell(cols.title);
    if title.is_empty() {
        return Err("missing title");
    }
    let year: i32 = cell(cols.year).parse().map_err(|_| "unparseable year")?;
    let date_published = NaiveDate::parse_from_str(cell(cols.date_published), "%Y-%m-%d")
        .map_err(|_| "unparseable date_published")?;
    if date_published.year() != year {
        return Err("date_published year differs from year");
    }
    let duration: i64 = cell(cols.duration)
        .parse()
        .map_err(|_| "unparseable duration")?;
    if duration <= 0 {
        return Err("non-positive duration");
    }
    let avg_vote: f64 = cell(cols.avg_vote)
        .parse()
        .map_err(|_| "unparseable avg_vote")?;
    if !(0.0..=10.0).contains(&avg_vote) {
        return Err("avg_vote outside [0, 10]");
    }
    let votes: u64 = cell(cols.votes).parse().map_err(|_| "unparseable votes")?;

    let genres: BTreeSet<String> = cell(cols.genre)
        .split(map.genre_separator.as_str())
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(String::from)
        .collect();
    if genres.is_empty() {
        return Err("no genres");
    }

    let number = |s: &str| s.parse::<f64>().ok();
    let top1000_voters_rating = optional(row, cols.top1000, number)
        .within(0.0, 10.0)
        .map_err(|_| "top1000_voters_rating outside [0, 10]")?;
    let budget = optional(row, cols.budget, parse_amount)
        .within(0.0, f64::MAX)
        .map_err(|_| "negative budget")?;
    let reviews_from_users = optional(row, cols.reviews_users, number)
        .within(0.0, f64::MAX)
        .map_err(|_| "negative reviews_from_users")?;
    let reviews_from_critics = optional(row, cols.reviews_critics, number)
        .within(0.0, f64::MAX)
        .map_err(|_| "negative reviews_from_critics")?;
    let metascore = match optional(row, cols.metascore, number).within(0.0, 100.0) {
        Ok(Some(m)) if m.fract() == 0.0 => Some(m as u8),
        Ok(None) => None,
        _ => return Err("metascore not an integer in [0, 100]"),
    };

    Ok(MovieRecord {
        title: title.to_string(),
        year,
        date_published,
        duration: duration as u32,
        avg_vote,
        votes,
        top1000_voters_rating,
        budget,
        reviews_from_users,
        reviews_from_critics,
        genres,
        metascore,
    })
}

/// Reads a delimited movie table with a header row.
///
/// Rows whose mandatory fields fail to parse or violate a record invariant
/// are dropped and counted; optional fields that are blank or unparseable
/// become absent.
pub fn load_movies(path: impl AsRef<Path>, map: &ColumnMap) -> Result<LoadReport, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(map.delimiter as u8)
        .flexible(true)
        .from_reader(file);
    let csv_err = |source| DataError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    let cols = Columns::resolve(&header, map)?;

    let mut records = Vec::new();
    let mut drop_reasons: BTreeMap<String, usize> = BTreeMap::new();
    for row in reader.records() {
        let outcome = match row {
            Ok(row) => parse_row(&row, &cols, map),
            Err(_) => Err("malformed row"),
        };
        match outcome {
            Ok(r) => records.push(r),
            Err(reason) => *drop_reasons.entry(reason.to_string()).or_default() += 1,
        }
    }
    let dropped = drop_reasons.values().sum();
    if records.is_empty() {
        return Err(DataError::NoParseableRows { dropped });
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} rows", path.display());
    }
    Ok(LoadReport {
        records,
        dropped,
        drop_reasons,
    })
}
