//! File formats: CSV inputs (predictions, truths, expert responses,
//! precomputed features), PGM images, canonical JSON and CSV outputs, and
//! atomic file writes.
//!
//! Every parser takes raw bytes so it can be exercised directly by the fuzz
//! targets; the `load_*` helpers add file reading and map failures to
//! [`LoadError::Io`] or [`LoadError::Format`].

pub mod json;
pub mod pgm;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agreement::{Answer, ExpertResponse};
use crate::model::{CenturyFloat, DateInterval, LineKey};
use crate::predictors::FeatureVector;

pub use json::{fmt_float, to_canonical_json};
pub use pgm::{encode_pgm, parse_pgm, PgmError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{what}: record {record}: {message}")]
pub struct FormatError {
    pub what: &'static str,
    /// 1-based data record number; 0 refers to the header.
    pub record: u64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
}

impl LoadError {
    pub fn is_io(&self) -> bool {
        matches!(self, LoadError::Io { .. })
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_with<T>(
    path: &Path,
    parse: impl FnOnce(&[u8]) -> Result<T, FormatError>,
) -> Result<T, LoadError> {
    let bytes = read_file(path)?;
    parse(&bytes).map_err(|source| LoadError::Format {
        path: path.to_path_buf(),
        source,
    })
}

struct Table<'a> {
    what: &'static str,
    reader: csv::Reader<&'a [u8]>,
}

impl<'a> Table<'a> {
    /// Opens a CSV whose header must equal `expected` exactly.
    fn open(what: &'static str, bytes: &'a [u8], expected: &[&str]) -> Result<Self, FormatError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = reader.headers().map_err(|e| FormatError {
            what,
            record: 0,
            message: e.to_string(),
        })?;
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(FormatError {
                what,
                record: 0,
                message: format!("header must be `{}`, got `{}`", expected.join(","), got.join(",")),
            });
        }
        Ok(Self { what, reader })
    }

    fn err(&self, record: u64, message: impl Into<String>) -> FormatError {
        FormatError {
            what: self.what,
            record,
            message: message.into(),
        }
    }

    fn rows(&mut self) -> Result<Vec<csv::StringRecord>, FormatError> {
        let what = self.what;
        self.reader
            .records()
            .enumerate()
            .map(|(i, r)| {
                r.map_err(|e| FormatError {
                    what,
                    record: i as u64 + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

fn nonempty<'r>(t: &Table, n: u64, v: &'r str, field: &str) -> Result<&'r str, FormatError> {
    if v.is_empty() {
        Err(t.err(n, format!("`{field}` is empty")))
    } else {
        Ok(v)
    }
}

fn parse_year(t: &Table, n: u64, v: &str, field: &str) -> Result<i64, FormatError> {
    let y: i64 = v
        .parse()
        .map_err(|_| t.err(n, format!("`{field}` must be a signed integer year, got `{v}`")))?;
    if y == 0 {
        return Err(t.err(n, format!("`{field}` is year 0")));
    }
    Ok(y)
}

fn parse_finite(t: &Table, n: u64, v: &str, field: &str) -> Result<f64, FormatError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| t.err(n, format!("`{field}` must be a finite number, got `{v}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub key: LineKey,
    pub pred: CenturyFloat,
}

pub const PREDICTIONS_HEADER: [&str; 3] = ["doc_id", "line_id", "pred_century"];

/// `doc_id,line_id,pred_century`; each line at most once.
pub fn parse_predictions(bytes: &[u8]) -> Result<Vec<PredictionRow>, FormatError> {
    let mut t = Table::open("predictions", bytes, &PREDICTIONS_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, r) in t.rows()?.iter().enumerate() {
        let n = i as u64 + 1;
        let key = LineKey::new(nonempty(&t, n, &r[0], "doc_id")?, nonempty(&t, n, &r[1], "line_id")?);
        let v = parse_finite(&t, n, &r[2], "pred_century")?;
        if !seen.insert(key.clone()) {
            return Err(t.err(n, format!("duplicate prediction for {key}")));
        }
        out.push(PredictionRow {
            key,
            pred: CenturyFloat::new(v).expect("checked finite"),
        });
    }
    Ok(out)
}

pub const TRUTH_HEADER: [&str; 2] = ["doc_id", "year"];

/// `doc_id,year` with signed non-zero integer years.
pub fn parse_truths(bytes: &[u8]) -> Result<BTreeMap<String, i64>, FormatError> {
    let mut t = Table::open("truths", bytes, &TRUTH_HEADER)?;
    let mut out = BTreeMap::new();
    for (i, r) in t.rows()?.iter().enumerate() {
        let n = i as u64 + 1;
        let doc = nonempty(&t, n, &r[0], "doc_id")?.to_string();
        let year = parse_year(&t, n, &r[1], "year")?;
        if out.insert(doc.clone(), year).is_some() {
            return Err(t.err(n, format!("duplicate truth for `{doc}`")));
        }
    }
    Ok(out)
}

pub const RESPONSES_HEADER: [&str; 5] = ["expert_id", "doc_id", "line_id", "lo_year", "hi_year"];

/// `expert_id,doc_id,line_id,lo_year,hi_year`; both years empty means abstain.
pub fn parse_responses(bytes: &[u8]) -> Result<Vec<ExpertResponse>, FormatError> {
    let mut t = Table::open("responses", bytes, &RESPONSES_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, r) in t.rows()?.iter().enumerate() {
        let n = i as u64 + 1;
        let expert_id = nonempty(&t, n, &r[0], "expert_id")?.to_string();
        let doc_id = nonempty(&t, n, &r[1], "doc_id")?.to_string();
        let line_id = nonempty(&t, n, &r[2], "line_id")?.to_string();
        let answer = match (&r[3], &r[4]) {
            ("", "") => Answer::Abstain,
            ("", _) | (_, "") => {
                return Err(t.err(n, "lo_year and hi_year must both be set or both empty"))
            }
            (lo, hi) => {
                let lo = parse_year(&t, n, lo, "lo_year")?;
                let hi = parse_year(&t, n, hi, "hi_year")?;
                Answer::Interval(DateInterval::from_years(lo, hi).map_err(|e| t.err(n, e.to_string()))?)
            }
        };
        if !seen.insert((expert_id.clone(), doc_id.clone(), line_id.clone())) {
            return Err(t.err(n, format!("duplicate response ({expert_id}, {doc_id}, {line_id})")));
        }
        out.push(ExpertResponse {
            expert_id,
            doc_id,
            line_id,
            answer,
        });
    }
    Ok(out)
}

/// `doc_id,line_id,f0,...,f{n-1}` with `n >= 1` feature columns.
pub fn parse_features(bytes: &[u8]) -> Result<BTreeMap<LineKey, FeatureVector>, FormatError> {
    let what = "features";
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| FormatError {
            what,
            record: 0,
            message: e.to_string(),
        })?
        .clone();
    let dims = headers.len().saturating_sub(2);
    let expected: Vec<String> = ["doc_id".to_string(), "line_id".to_string()]
        .into_iter()
        .chain((0..dims).map(|i| format!("f{i}")))
        .collect();
    if dims == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(FormatError {
            what,
            record: 0,
            message: "header must be `doc_id,line_id,f0,...,fN`".into(),
        });
    }
    let mut t = Table { what, reader };
    let mut out = BTreeMap::new();
    for (i, r) in t.rows()?.iter().enumerate() {
        let n = i as u64 + 1;
        let key = LineKey::new(nonempty(&t, n, &r[0], "doc_id")?, nonempty(&t, n, &r[1], "line_id")?);
        let values = (0..dims)
            .map(|j| parse_finite(&t, n, &r[j + 2], &expected[j + 2]))
            .collect::<Result<Vec<f64>, _>>()?;
        let fv = FeatureVector::new(values).expect("checked finite");
        if out.insert(key.clone(), fv).is_some() {
            return Err(t.err(n, format!("duplicate features for {key}")));
        }
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRow>, LoadError> {
    load_with(path, parse_predictions)
}

pub fn load_truths(path: &Path) -> Result<BTreeMap<String, i64>, LoadError> {
    load_with(path, parse_truths)
}

pub fn load_responses(path: &Path) -> Result<Vec<ExpertResponse>, LoadError> {
    load_with(path, parse_responses)
}

pub fn load_features(path: &Path) -> Result<BTreeMap<LineKey, FeatureVector>, LoadError> {
    load_with(path, parse_features)
}

pub fn load_pgm(path: &Path) -> Result<crate::predictors::GrayImage, LoadError> {
    let bytes = read_file(path)?;
    parse_pgm(&bytes).map_err(|e| LoadError::Format {
        path: path.to_path_buf(),
        source: FormatError {
            what: "pgm",
            record: 0,
            message: e.to_string(),
        },
    })
}

/// Builds a CSV document with `\n` line endings from preformatted cells.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_parse() {
        let rows = parse_predictions(b"doc_id,line_id,pred_century\nTM1,1,-1.5\nTM1,2, -1.25 \n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].pred.value(), -1.25);
        let err = parse_predictions(b"doc_id,line_id,pred_century\nTM1,1,-1.5\nTM1,1,-1.0\n").unwrap_err();
        assert_eq!(err.record, 2);
        assert!(parse_predictions(b"doc_id,line,pred\n").is_err());
        assert!(parse_predictions(b"doc_id,line_id,pred_century\nTM1,1,NaN\n").is_err());
        assert!(parse_predictions(b"doc_id,line_id,pred_century\nTM1,1\n").is_err());
    }

    #[test]
    fn truths_parse() {
        let t = parse_truths(b"doc_id,year\nTM1,-150\nTM2,-99\n").unwrap();
        assert_eq!(t["TM1"], -150);
        assert!(parse_truths(b"doc_id,year\nTM1,0\n").is_err());
        assert!(parse_truths(b"doc_id,year\nTM1,-1.5\n").is_err());
        assert!(parse_truths(b"doc_id,year\nTM1,-1\nTM1,-2\n").is_err());
    }

    #[test]
    fn responses_parse() {
        let r = parse_responses(
            b"expert_id,doc_id,line_id,lo_year,hi_year\nE1,TM1,1,-200,-150\nE1,TM1,2,,\n",
        )
        .unwrap();
        assert!(matches!(r[0].answer, Answer::Interval(_)));
        assert_eq!(r[1].answer, Answer::Abstain);
        let half = parse_responses(b"expert_id,doc_id,line_id,lo_year,hi_year\nE1,TM1,1,-200,\n");
        assert!(half.is_err());
        let inverted = parse_responses(b"expert_id,doc_id,line_id,lo_year,hi_year\nE1,TM1,1,-100,-200\n");
        assert!(inverted.is_err());
    }

    #[test]
    fn features_parse() {
        let f = parse_features(b"doc_id,line_id,f0,f1\nA,1,0.5,0.25\nA,2,1,0\n").unwrap();
        assert_eq!(f[&LineKey::new("A", "1")].values(), &[0.5, 0.25]);
        assert!(parse_features(b"doc_id,line_id\n").is_err());
        assert!(parse_features(b"doc_id,line_id,f1\n").is_err());
        assert!(parse_features(b"doc_id,line_id,f0\nA,1,inf\n").is_err());
    }

    #[test]
    fn csv_writer_uses_lf() {
        let b = csv_bytes(&["a", "b"], &[vec!["1".into(), "x,y".into()]]);
        assert_eq!(b, b"a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
    }

    #[test]
    fn load_error_kinds() {
        assert!(load_truths(Path::new("/no/such/file.csv")).unwrap_err().is_io());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "bad\n").unwrap();
        assert!(!load_truths(&p).unwrap_err().is_io());
    }
}
