//! Seeded training protocols over the reference predictors.
//!
//! Three protocols are supported. `baseline` fits on fractions of one
//! dataset's train part. `transfer` pretrains on a source dataset and keeps
//! fitting on fractions of a target. `union` trains on all of A plus
//! fractions of B. Every protocol scores each fraction on one fixed test set,
//! and every random choice derives from the configured seed.

pub mod config;
pub mod split;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use config::{parse_experiment_config, ConfigError, DatasetRef, ExperimentConfig, Protocol};
pub use split::{split, split_from_labels, subsample, subsample_size, Split, SplitSpec, SplitUnit};

use crate::io::{self, LoadError};
use crate::metrics::{self, EtwResult, MetricsError, SweepGrid, WidthMode};
use crate::model::{
    load_manifest, validate_manifest, CenturyFloat, DateError, LineKey, LineSource,
    ManifestError, Violation,
};
use crate::predictors::{extract_features, FeatureVector, Predictor, PredictorConfig, PredictorError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("split would leave {part} empty ({units} units available)")]
    EmptyPart { part: &'static str, units: usize },
    #[error("no split label for `{0}`")]
    NoSplit(String),
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("fraction {fraction} of {n} items selects nothing")]
    EmptySubset { fraction: f64, n: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("manifest `{name}` has {} violation(s), first: {}", .violations.len(), .violations[0])]
    InvalidManifest {
        name: String,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("no features row for {key} in {}", .path.display())]
    MissingFeatures { key: LineKey, path: PathBuf },
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Date(#[from] DateError),
}

impl HarnessError {
    /// True when the failure was reading a file rather than its content.
    pub fn is_io(&self) -> bool {
        match self {
            HarnessError::Manifest(ManifestError::Io { .. }) => true,
            HarnessError::Load(e) => e.is_io(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineItem {
    pub key: LineKey,
    pub truth: CenturyFloat,
    pub features: FeatureVector,
}

/// A manifest with every line's features resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub items: BTreeMap<LineKey, LineItem>,
}

/// Loads a manifest and resolves each line's features. Image and features
/// paths are relative to the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<(crate::model::DatasetManifest, Dataset), HarnessError> {
    let manifest = load_manifest(manifest_path)?;
    let violations = validate_manifest(&manifest);
    if !violations.is_empty() {
        return Err(HarnessError::InvalidManifest {
            name: manifest.name.clone(),
            violations,
        });
    }
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let mut tables: BTreeMap<PathBuf, BTreeMap<LineKey, FeatureVector>> = BTreeMap::new();
    let mut items = BTreeMap::new();
    for doc in &manifest.documents {
        let truth = doc.truth()?;
        for line in &doc.lines {
            let key = LineKey::new(&doc.doc_id, &line.line_id);
            let features = match line.source() {
                Some(LineSource::Image(p)) => extract_features(&io::load_pgm(&base.join(p))?),
                Some(LineSource::Features(p)) => {
                    let path = base.join(p);
                    if !tables.contains_key(&path) {
                        tables.insert(path.clone(), io::load_features(&path)?);
                    }
                    tables[&path]
                        .get(&key)
                        .cloned()
                        .ok_or_else(|| HarnessError::MissingFeatures {
                            key: key.clone(),
                            path: path.clone(),
                        })?
                }
                None => unreachable!("validated manifests have exactly one source"),
            };
            items.insert(key.clone(), LineItem { key, truth, features });
        }
    }
    Ok((
        manifest.clone(),
        Dataset {
            name: manifest.name,
            items,
        },
    ))
}

/// A dataset cut into its three parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitioned {
    pub name: String,
    pub unit: Option<SplitUnit>,
    pub train: Vec<LineItem>,
    pub val: Vec<LineItem>,
    pub test: Vec<LineItem>,
}

impl Partitioned {
    pub fn new(name: &str, unit: Option<SplitUnit>, data: &Dataset, split: &Split) -> Self {
        let pick = |keys: &[LineKey]| keys.iter().map(|k| data.items[k].clone()).collect();
        Self {
            name: name.to_string(),
            unit,
            train: pick(&split.train),
            val: pick(&split.val),
            test: pick(&split.test),
        }
    }

    pub fn counts(&self) -> SplitCounts {
        SplitCounts {
            train: self.train.len(),
            val: self.val.len(),
            test: self.test.len(),
            unit: self.unit,
        }
    }
}

/// Line counts per part, as in a dataset overview table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// `None` when the manifest's own labels were used.
    pub unit: Option<SplitUnit>,
}

fn xy(items: &[LineItem]) -> (Vec<FeatureVector>, Vec<CenturyFloat>) {
    items.iter().map(|i| (i.features.clone(), i.truth)).unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etw: Option<Vec<EtwResult>>,
}

pub fn score(
    model: &impl Predictor,
    test: &[LineItem],
    etw: Option<&SweepGrid>,
) -> Result<(Scores, Vec<CenturyFloat>), HarnessError> {
    let (x, truths) = xy(test);
    let preds = model.predict_all(&x)?;
    let etw = etw
        .map(|g| metrics::etw_sweep(&preds, &truths, g, WidthMode::HalfWidth))
        .transpose()?;
    let scores = Scores {
        n: test.len(),
        mae: metrics::mae(&preds, &truths)?,
        mse: metrics::mse(&preds, &truths)?,
        etw,
    };
    Ok((scores, preds))
}

fn pct(fraction: f64) -> f64 {
    (fraction * 100.0 * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub pct: f64,
    pub n_train: usize,
    pub test: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub dataset: String,
    pub rows: Vec<BaselineRow>,
}

/// Refits from scratch for each fraction of the train part and scores on
/// the full test part.
pub fn run_baseline(
    data: &Partitioned,
    predictor: &PredictorConfig,
    fractions: &[f64],
    seed: u64,
    etw: Option<&SweepGrid>,
) -> Result<BaselineReport, HarnessError> {
    let mut rows = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let train = subsample(&data.train, f, seed)?;
        let (x, y) = xy(&train);
        let mut model = predictor.build()?;
        model.fit(&x, &y)?;
        let (test, _) = score(&model, &data.test, etw)?;
        rows.push(BaselineRow {
            pct: pct(f),
            n_train: train.len(),
            test,
        });
    }
    Ok(BaselineReport {
        dataset: data.name.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferRow {
    pub pct: f64,
    pub n_target_train: usize,
    pub test: Scores,
    #[serde(skip)]
    pub predictions: Vec<CenturyFloat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub source: String,
    pub target: String,
    pub n_source_train: usize,
    pub rows: Vec<TransferRow>,
}

/// Fits on the whole source train part, then for each fraction continues
/// on that share of the target train part. Fraction 0 scores the source
/// model unchanged. All rows use the target test part.
pub fn run_transfer(
    source: &Partitioned,
    target: &Partitioned,
    predictor: &PredictorConfig,
    fractions: &[f64],
    seed: u64,
    etw: Option<&SweepGrid>,
) -> Result<TransferReport, HarnessError> {
    let (x, y) = xy(&source.train);
    let mut pretrained = predictor.build()?;
    pretrained.fit(&x, &y)?;
    let mut rows = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let mut model = pretrained.clone();
        let mut n_target_train = 0;
        if f != 0.0 {
            let more = subsample(&target.train, f, seed)?;
            let (x, y) = xy(&more);
            model.continue_fit(&x, &y)?;
            n_target_train = more.len();
        }
        let (test, predictions) = score(&model, &target.test, etw)?;
        rows.push(TransferRow {
            pct: pct(f),
            n_target_train,
            test,
            predictions,
        });
    }
    Ok(TransferReport {
        source: source.name.clone(),
        target: target.name.clone(),
        n_source_train: source.train.len(),
        rows,
    })
}

/// Train-size ratio at or above which a union row is flagged balanced.
pub const BALANCE_RATIO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionRow {
    pub pct: f64,
    pub n_train_a: usize,
    pub n_train_b: usize,
    pub balanced: bool,
    pub test_a: Scores,
    pub test_b: Scores,
    pub test_ab: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionReport {
    pub a: String,
    pub b: String,
    pub rows: Vec<UnionRow>,
}

/// Trains on all of A's train part plus a fraction of B's and scores on the
/// test parts of A, B and both together.
pub fn run_union(
    a: &Partitioned,
    b: &Partitioned,
    predictor: &PredictorConfig,
    fractions: &[f64],
    seed: u64,
    etw: Option<&SweepGrid>,
) -> Result<UnionReport, HarnessError> {
    let test_ab: Vec<LineItem> = a.test.iter().chain(&b.test).cloned().collect();
    let mut rows = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let b_part = subsample(&b.train, f, seed)?;
        let train: Vec<LineItem> = a.train.iter().chain(&b_part).cloned().collect();
        let (x, y) = xy(&train);
        let mut model = predictor.build()?;
        model.fit(&x, &y)?;
        let (na, nb) = (a.train.len(), b_part.len());
        let balanced = na.min(nb) as f64 / na.max(nb) as f64 >= BALANCE_RATIO;
        rows.push(UnionRow {
            pct: pct(f),
            n_train_a: na,
            n_train_b: nb,
            balanced,
            test_a: score(&model, &a.test, etw)?.0,
            test_b: score(&model, &b.test, etw)?.0,
            test_ab: score(&model, &test_ab, etw)?.0,
        });
    }
    Ok(UnionReport {
        a: a.name.clone(),
        b: b.name.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub splits: BTreeMap<String, SplitCounts>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub baseline: Vec<BaselineReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub union: Option<UnionReport>,
}

/// Loads and splits one configured dataset. Paths resolve against `base`.
pub fn prepare_dataset(
    d: &DatasetRef,
    base: &Path,
    seed: u64,
) -> Result<Partitioned, HarnessError> {
    let (manifest, data) = load_dataset(&base.join(&d.manifest))?;
    let (split, unit) = match &d.split {
        Some(s) => (split(&manifest, &s.spec(seed))?, Some(s.unit)),
        None => (split_from_labels(&manifest)?, None),
    };
    Ok(Partitioned::new(&d.name, unit, &data, &split))
}

/// Runs every configured protocol. Baseline covers each dataset in turn;
/// transfer and union use the first dataset as source/A and the second as
/// target/B.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let parts = cfg
        .datasets
        .iter()
        .map(|d| prepare_dataset(d, base, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let etw = cfg.etw.as_ref();
    let mut report = ExperimentReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        splits: parts.iter().map(|p| (p.name.clone(), p.counts())).collect(),
        baseline: Vec::new(),
        transfer: None,
        union: None,
    };
    let mut protocols = cfg.protocol.clone();
    protocols.sort();
    protocols.dedup();
    for p in protocols {
        match p {
            Protocol::Baseline => {
                for d in &parts {
                    report.baseline.push(run_baseline(
                        d,
                        &cfg.predictor,
                        &cfg.baseline_fractions,
                        cfg.seed,
                        etw,
                    )?);
                }
            }
            Protocol::Transfer => {
                report.transfer = Some(run_transfer(
                    &parts[0],
                    &parts[1],
                    &cfg.predictor,
                    &cfg.transfer_fractions,
                    cfg.seed,
                    etw,
                )?);
            }
            Protocol::Union => {
                report.union = Some(run_union(
                    &parts[0],
                    &parts[1],
                    &cfg.predictor,
                    &cfg.union_fractions,
                    cfg.seed,
                    etw,
                )?);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(doc: &str, year: i64, f: &[f64]) -> LineItem {
        LineItem {
            key: LineKey::new(doc, "1"),
            truth: crate::model::year_to_century(year).unwrap(),
            features: FeatureVector::new(f.to_vec()).unwrap(),
        }
    }

    fn part(name: &str, train: Vec<LineItem>, test: Vec<LineItem>) -> Partitioned {
        Partitioned {
            name: name.into(),
            unit: Some(SplitUnit::Document),
            train,
            val: Vec::new(),
            test,
        }
    }

    fn toy() -> (Partitioned, Partitioned) {
        let a = part(
            "a",
            vec![item("a1", 100, &[0.0]), item("a2", 200, &[1.0]), item("a3", 300, &[2.0]), item("a4", 400, &[3.0])],
            vec![item("a5", 150, &[0.5]), item("a6", 350, &[2.5])],
        );
        let b = part(
            "b",
            vec![item("b1", -100, &[9.0]), item("b2", -200, &[8.0])],
            vec![item("b3", -150, &[8.5])],
        );
        (a, b)
    }

    #[test]
    fn baseline_mean_matches_closed_form() {
        let (a, _) = toy();
        let r = run_baseline(&a, &PredictorConfig::Mean, &[1.0, 0.5], 3, None).unwrap();
        // mean of 1..4 centuries is 2.5; errors on 1.5 and 3.5 are both 1.0
        assert_eq!(r.rows[0].n_train, 4);
        assert!((r.rows[0].test.mae - 1.0).abs() < 1e-12);
        assert_eq!(r.rows[1].n_train, 2);
        assert_eq!(r.rows[1].test.n, 2);
    }

    #[test]
    fn transfer_zero_is_pretrained() {
        let (a, b) = toy();
        let r = run_transfer(&a, &b, &PredictorConfig::Knn { k: 1 }, &[0.0, 1.0], 9, None).unwrap();
        let mut m = PredictorConfig::Knn { k: 1 }.build().unwrap();
        let (x, y) = xy(&a.train);
        m.fit(&x, &y).unwrap();
        let (_, alone) = score(&m, &b.test, None).unwrap();
        assert_eq!(r.rows[0].predictions, alone);
        assert_eq!(r.rows[0].n_target_train, 0);
        assert_eq!(r.rows[1].n_target_train, 2);
    }

    #[test]
    fn transfer_full_mean_is_pooled_mean() {
        let (a, b) = toy();
        let r = run_transfer(&a, &b, &PredictorConfig::Mean, &[1.0], 9, None).unwrap();
        // pooled mean of 1,2,3,4,-1,-2 centuries = 7/6
        assert!((r.rows[0].predictions[0].value() - 7.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn union_same_dataset_metrics_coincide() {
        let (a, _) = toy();
        let r = run_union(&a, &a, &PredictorConfig::Knn { k: 2 }, &[1.0], 1, None).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.test_a.mae, row.test_b.mae);
        assert_eq!(row.test_a.mae, row.test_ab.mae);
        assert!(row.balanced);
    }

    #[test]
    fn union_balance_flag() {
        let (a, b) = toy();
        let r = run_union(&a, &b, &PredictorConfig::Mean, &[1.0, 0.5], 1, None).unwrap();
        assert!(!r.rows[0].balanced);
        assert_eq!((r.rows[1].n_train_a, r.rows[1].n_train_b), (4, 1));
    }
}
