//! Date conventions and dataset manifests.
//!
//! Dates are carried as [`CenturyFloat`]: a signed number of centuries where
//! `value * 100` is the calendar year and BCE years are negative. There is no
//! year zero and no astronomical shift is applied, so `-1.55` is 155 BCE and
//! `1.50` is 150 CE.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DateError {
    #[error("year 0 does not exist in the signed-year convention")]
    YearZero,
    #[error("century value {0} is not finite")]
    NonFinite(f64),
    #[error("century value {0} rounds to year 0")]
    RoundsToYearZero(f64),
    #[error("invalid interval: lo {lo} > hi {hi}")]
    InvertedInterval { lo: f64, hi: f64 },
}

/// A date (or a date difference) expressed in centuries.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CenturyFloat(f64);

impl CenturyFloat {
    pub fn new(value: f64) -> Result<Self, DateError> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(DateError::NonFinite(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Value expressed in years (not rounded).
    pub fn years(self) -> f64 {
        self.0 * 100.0
    }
}

impl TryFrom<f64> for CenturyFloat {
    type Error = DateError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<CenturyFloat> for f64 {
    fn from(c: CenturyFloat) -> f64 {
        c.0
    }
}

impl fmt::Display for CenturyFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

/// Converts a signed calendar year to centuries (`150 -> 1.50`, `-155 -> -1.55`).
pub fn year_to_century(year: i64) -> Result<CenturyFloat, DateError> {
    if year == 0 {
        return Err(DateError::YearZero);
    }
    Ok(CenturyFloat(year as f64 / 100.0))
}

/// Inverse of [`year_to_century`]; rounds to the nearest year, ties away from zero.
pub fn century_to_year(cf: CenturyFloat) -> Result<i64, DateError> {
    let v = cf.value();
    if !v.is_finite() {
        return Err(DateError::NonFinite(v));
    }
    // f64::round already breaks ties away from zero
    let year = (v * 100.0).round();
    if year == 0.0 {
        return Err(DateError::RoundsToYearZero(v));
    }
    Ok(year as i64)
}

/// Closed date interval `[lo, hi]`; `lo == hi` is a point answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DateInterval {
    lo: CenturyFloat,
    hi: CenturyFloat,
}

impl DateInterval {
    pub fn new(lo: CenturyFloat, hi: CenturyFloat) -> Result<Self, DateError> {
        if lo.value() > hi.value() {
            return Err(DateError::InvertedInterval {
                lo: lo.value(),
                hi: hi.value(),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn from_years(lo: i64, hi: i64) -> Result<Self, DateError> {
        Self::new(year_to_century(lo)?, year_to_century(hi)?)
    }

    pub fn lo(&self) -> CenturyFloat {
        self.lo
    }

    pub fn hi(&self) -> CenturyFloat {
        self.hi
    }

    pub fn contains(&self, c: CenturyFloat) -> bool {
        self.lo.value() <= c.value() && c.value() <= self.hi.value()
    }
}

pub fn interval_midpoint(i: &DateInterval) -> CenturyFloat {
    CenturyFloat((i.lo.value() + i.hi.value()) / 2.0)
}

/// How an interval answer is reduced to a single date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointRule {
    #[default]
    Midpoint,
    /// The interval point closest to the truth; the error is 0 inside the interval.
    NearestEndpoint,
}

impl PointRule {
    pub fn point(self, interval: &DateInterval, truth: CenturyFloat) -> CenturyFloat {
        match self {
            PointRule::Midpoint => interval_midpoint(interval),
            PointRule::NearestEndpoint => CenturyFloat(
                truth
                    .value()
                    .clamp(interval.lo.value(), interval.hi.value()),
            ),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointRule::Midpoint => "midpoint",
            PointRule::NearestEndpoint => "nearest-endpoint",
        }
    }
}

impl std::str::FromStr for PointRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(PointRule::Midpoint),
            "nearest-endpoint" => Ok(PointRule::NearestEndpoint),
            other => Err(format!(
                "unknown point rule `{other}` (expected midpoint | nearest-endpoint)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Val,
    Test,
}

/// `(doc_id, line_id)` pair identifying one line image.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineKey {
    pub doc_id: String,
    pub line_id: String,
}

impl LineKey {
    pub fn new(doc_id: impl Into<String>, line_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            line_id: line_id.into(),
        }
    }

    /// Key used in the manifest `splits` map: `doc_id/line_id`.
    pub fn split_key(&self) -> String {
        format!("{}/{}", self.doc_id, self.line_id)
    }
}

impl fmt::Display for LineKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.doc_id, self.line_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub line_id: String,
    /// Grayscale PGM image, relative to the manifest directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    /// Features CSV holding this line's row, relative to the manifest directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSource<'a> {
    Image(&'a Path),
    Features(&'a Path),
}

impl LineRecord {
    /// The line's source, or `None` unless exactly one kind is set.
    pub fn source(&self) -> Option<LineSource<'_>> {
        match (&self.image, &self.features) {
            (Some(p), None) => Some(LineSource::Image(p)),
            (None, Some(p)) => Some(LineSource::Features(p)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatedDocument {
    pub doc_id: String,
    pub ground_truth_year: i64,
    /// Dataset tag; defaults to the manifest name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub lines: Vec<LineRecord>,
}

impl DatedDocument {
    pub fn truth(&self) -> Result<CenturyFloat, DateError> {
        year_to_century(self.ground_truth_year)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub documents: Vec<DatedDocument>,
    /// `doc_id/line_id` -> split label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<BTreeMap<String, SplitLabel>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptyDocId,
    DuplicateDocId,
    NoLines,
    YearZero,
    DuplicateLineId,
    SourceNotExactlyOne,
    SplitMissing,
    SplitUnknownLine,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::EmptyDocId => "empty_doc_id",
            Rule::DuplicateDocId => "duplicate_doc_id",
            Rule::NoLines => "no_lines",
            Rule::YearZero => "year_zero",
            Rule::DuplicateLineId => "duplicate_line_id",
            Rule::SourceNotExactlyOne => "source_not_exactly_one",
            Rule::SplitMissing => "split_missing",
            Rule::SplitUnknownLine => "split_unknown_line",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub doc_id: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.doc_id, self.rule.as_str(), self.detail)
    }
}

/// Checks every manifest invariant; an empty result means the manifest is valid.
pub fn validate_manifest(m: &DatasetManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen_docs = BTreeSet::new();
    let mut all_lines = BTreeSet::new();

    for doc in &m.documents {
        let v = |rule, detail: String| Violation {
            doc_id: doc.doc_id.clone(),
            rule,
            detail,
        };
        if doc.doc_id.is_empty() {
            out.push(v(Rule::EmptyDocId, "doc_id is empty".into()));
        }
        if !seen_docs.insert(doc.doc_id.as_str()) {
            out.push(v(
                Rule::DuplicateDocId,
                format!("doc_id `{}` appears more than once", doc.doc_id),
            ));
        }
        if doc.ground_truth_year == 0 {
            out.push(v(Rule::YearZero, "ground_truth_year is 0".into()));
        }
        if doc.lines.is_empty() {
            out.push(v(Rule::NoLines, "document has no lines".into()));
        }
        let mut seen_lines = BTreeSet::new();
        for line in &doc.lines {
            if !seen_lines.insert(line.line_id.as_str()) {
                out.push(v(
                    Rule::DuplicateLineId,
                    format!("line_id `{}` appears more than once", line.line_id),
                ));
            }
            if line.source().is_none() {
                out.push(v(
                    Rule::SourceNotExactlyOne,
                    format!(
                        "line `{}` must set exactly one of `image` or `features`",
                        line.line_id
                    ),
                ));
            }
            all_lines.insert(LineKey::new(&doc.doc_id, &line.line_id).split_key());
        }
    }

    if let Some(splits) = &m.splits {
        for key in &all_lines {
            if !splits.contains_key(key) {
                let doc_id = key.split('/').next().unwrap_or_default().to_string();
                out.push(Violation {
                    doc_id,
                    rule: Rule::SplitMissing,
                    detail: format!("line `{key}` has no split label"),
                });
            }
        }
        for key in splits.keys() {
            if !all_lines.contains(key) {
                let doc_id = key.split('/').next().unwrap_or_default().to_string();
                out.push(Violation {
                    doc_id,
                    rule: Rule::SplitUnknownLine,
                    detail: format!("split label for unknown line `{key}`"),
                });
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest at `{path}`: {message}")]
    Parse { path: String, message: String },
}

/// Parses manifest JSON. Errors carry the JSON path of the offending field.
pub fn parse_manifest(bytes: &[u8]) -> Result<DatasetManifest, ManifestError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| ManifestError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest, ManifestError> {
    let bytes = std::fs::read(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&bytes)
}
