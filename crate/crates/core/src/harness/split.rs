//! Seeded train/val/test partitioning and fraction subsampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{DatasetManifest, LineKey, SplitLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitUnit {
    /// All lines of a document land in the same part.
    #[default]
    Document,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub unit: SplitUnit,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), String> {
        let r = [self.train, self.val, self.test];
        if r.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err("ratios must be positive".into());
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("ratios must sum to 1, got {sum}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Split {
    pub train: Vec<LineKey>,
    pub val: Vec<LineKey>,
    pub test: Vec<LineKey>,
}

impl Split {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Partitions the manifest's lines. Units are shuffled with the seed and
/// dealt train, val, test; each part keeps manifest order.
pub fn split(manifest: &DatasetManifest, spec: &SplitSpec) -> Result<Split, HarnessError> {
    spec.validate().map_err(HarnessError::BadSplit)?;
    let units: Vec<Vec<LineKey>> = match spec.unit {
        SplitUnit::Document => manifest
            .documents
            .iter()
            .map(|d| {
                d.lines
                    .iter()
                    .map(|l| LineKey::new(&d.doc_id, &l.line_id))
                    .collect()
            })
            .collect(),
        SplitUnit::Line => manifest
            .documents
            .iter()
            .flat_map(|d| d.lines.iter().map(|l| vec![LineKey::new(&d.doc_id, &l.line_id)]))
            .collect(),
    };
    let n = units.len();
    let n_test = (spec.test * n as f64).round() as usize;
    let n_val = (spec.val * n as f64).round() as usize;
    let n_train = n.saturating_sub(n_test + n_val);
    for (part, count) in [("train", n_train), ("val", n_val), ("test", n_test)] {
        if count == 0 {
            return Err(HarnessError::EmptyPart {
                part,
                units: n,
            });
        }
    }

    let order = shuffled_indices(n, spec.seed);
    let mut label = vec![SplitLabel::Train; n];
    for &u in &order[n_train..n_train + n_val] {
        label[u] = SplitLabel::Val;
    }
    for &u in &order[n_train + n_val..] {
        label[u] = SplitLabel::Test;
    }
    let mut out = Split::default();
    for (u, lines) in units.into_iter().enumerate() {
        let part = match label[u] {
            SplitLabel::Train => &mut out.train,
            SplitLabel::Val => &mut out.val,
            SplitLabel::Test => &mut out.test,
        };
        part.extend(lines);
    }
    Ok(out)
}

/// Uses the manifest's own `splits` labels.
pub fn split_from_labels(manifest: &DatasetManifest) -> Result<Split, HarnessError> {
    let labels = manifest
        .splits
        .as_ref()
        .ok_or_else(|| HarnessError::NoSplit(manifest.name.clone()))?;
    let mut out = Split::default();
    for d in &manifest.documents {
        for l in &d.lines {
            let key = LineKey::new(&d.doc_id, &l.line_id);
            let part = match labels.get(&key.split_key()) {
                Some(SplitLabel::Train) => &mut out.train,
                Some(SplitLabel::Val) => &mut out.val,
                Some(SplitLabel::Test) => &mut out.test,
                None => return Err(HarnessError::NoSplit(key.split_key())),
            };
            part.push(key);
        }
    }
    for (part, v) in [("train", &out.train), ("test", &out.test)] {
        if v.is_empty() {
            return Err(HarnessError::EmptyPart { part, units: 0 });
        }
    }
    Ok(out)
}

/// Number of items kept for `fraction` of `n`.
pub fn subsample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// `floor(fraction * n)` items drawn without replacement, returned in their
/// original order. The draw is a prefix of one seeded shuffle, so for a fixed
/// seed a smaller fraction always selects a subset of a larger one.
pub fn subsample<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<Vec<T>, HarnessError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(HarnessError::BadFraction(fraction));
    }
    if fraction == 1.0 {
        return Ok(items.to_vec());
    }
    let k = subsample_size(items.len(), fraction);
    if k == 0 {
        return Err(HarnessError::EmptySubset {
            fraction,
            n: items.len(),
        });
    }
    let mut chosen = shuffled_indices(items.len(), seed);
    chosen.truncate(k);
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| items[i].clone()).collect())
}
