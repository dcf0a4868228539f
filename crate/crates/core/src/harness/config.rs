//! Experiment configuration file.
//!
//! ```json
//! {
//!   "protocol": ["baseline", "transfer", "union"],
//!   "seed": 42,
//!   "datasets": [
//!     {"name": "pll", "manifest": "pll/manifest.json",
//!      "split": {"train": 0.8, "val": 0.1, "test": 0.1, "unit": "document"}},
//!     {"name": "hell-date", "manifest": "hd/manifest.json"}
//!   ],
//!   "predictor": {"kind": "knn", "k": 3},
//!   "baseline_fractions": [1.0, 0.5, 0.35, 0.1],
//!   "etw": {"alpha_min": 0.0, "alpha_max": 2.5, "alpha_step": 0.1},
//!   "output_dir": "out"
//! }
//! ```
//!
//! Relative paths resolve against the config file's directory. A dataset
//! without `split` uses the labels stored in its manifest.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use super::split::{SplitSpec, SplitUnit};
use crate::metrics::SweepGrid;
use crate::predictors::PredictorConfig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Baseline,
    Transfer,
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    #[serde(default)]
    pub unit: SplitUnit,
    /// Defaults to the experiment seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SplitConfig {
    pub fn spec(&self, default_seed: u64) -> SplitSpec {
        SplitSpec {
            train: self.train,
            val: self.val,
            test: self.test,
            unit: self.unit,
            seed: self.seed.unwrap_or(default_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub name: String,
    pub manifest: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitConfig>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Protocol>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Protocol),
        Many(Vec<Protocol>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

pub fn default_baseline_fractions() -> Vec<f64> {
    vec![1.0, 0.5, 0.35, 0.10]
}

pub fn default_transfer_fractions() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

pub fn default_union_fractions() -> Vec<f64> {
    vec![1.0, 0.5, 0.35, 0.10]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub protocol: Vec<Protocol>,
    pub seed: u64,
    pub datasets: Vec<DatasetRef>,
    pub predictor: PredictorConfig,
    #[serde(default = "default_baseline_fractions")]
    pub baseline_fractions: Vec<f64>,
    #[serde(default = "default_transfer_fractions")]
    pub transfer_fractions: Vec<f64>,
    #[serde(default = "default_union_fractions")]
    pub union_fractions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etw: Option<SweepGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Semantic checks beyond the schema; errors name the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.protocol.is_empty() {
            return Err(ConfigError::at("protocol", "at least one protocol is required"));
        }
        if self.datasets.is_empty() {
            return Err(ConfigError::at("datasets", "at least one dataset is required"));
        }
        let needs_pair = self
            .protocol
            .iter()
            .any(|p| matches!(p, Protocol::Transfer | Protocol::Union));
        if needs_pair && self.datasets.len() < 2 {
            return Err(ConfigError::at(
                "datasets",
                "transfer and union protocols need two datasets (source/A first, target/B second)",
            ));
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if d.name.is_empty() {
                return Err(ConfigError::at(format!("datasets[{i}].name"), "must not be empty"));
            }
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                return Err(ConfigError::at(format!("datasets[{i}].name"), "duplicate dataset name"));
            }
            if let Some(s) = &d.split {
                s.spec(self.seed)
                    .validate()
                    .map_err(|m| ConfigError::at(format!("datasets[{i}].split"), m))?;
            }
        }
        if let PredictorConfig::Knn { k: 0 } = self.predictor {
            return Err(ConfigError::at("predictor.k", "k must be >= 1"));
        }
        let check = |field: &str, fracs: &[f64], allow_zero: bool| -> Result<(), ConfigError> {
            if fracs.is_empty() {
                return Err(ConfigError::at(field, "must not be empty"));
            }
            for (i, f) in fracs.iter().enumerate() {
                let ok = f.is_finite() && *f <= 1.0 && (*f > 0.0 || (allow_zero && *f == 0.0));
                if !ok {
                    let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
                    return Err(ConfigError::at(
                        format!("{field}[{i}]"),
                        format!("fraction {f} outside {range}"),
                    ));
                }
            }
            Ok(())
        };
        check("baseline_fractions", &self.baseline_fractions, false)?;
        check("transfer_fractions", &self.transfer_fractions, true)?;
        check("union_fractions", &self.union_fractions, false)?;
        if let Some(g) = &self.etw {
            g.validate().map_err(|e| ConfigError::at("etw", e.to_string()))?;
        }
        Ok(())
    }
}

pub fn parse_experiment_config(bytes: &[u8]) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::at(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "protocol": "baseline", "seed": 7,
        "datasets": [{"name": "a", "manifest": "a.json",
                      "split": {"train": 0.8, "val": 0.1, "test": 0.1}}],
        "predictor": {"kind": "mean"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_experiment_config(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.protocol, vec![Protocol::Baseline]);
        assert_eq!(c.baseline_fractions, vec![1.0, 0.5, 0.35, 0.10]);
        assert_eq!(c.transfer_fractions, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let s = c.datasets[0].split.unwrap().spec(c.seed);
        assert_eq!((s.unit, s.seed), (SplitUnit::Document, 7));
    }

    #[test]
    fn schema_errors_carry_path() {
        let bad = MINIMAL.replace(r#""kind": "mean""#, r#""kind": "svm""#);
        assert_eq!(parse_experiment_config(bad.as_bytes()).unwrap_err().path, "predictor.kind");
        let bad = MINIMAL.replace(r#""train": 0.8"#, r#""train": "x""#);
        assert_eq!(
            parse_experiment_config(bad.as_bytes()).unwrap_err().path,
            "datasets[0].split.train"
        );
        let bad = MINIMAL.replace(r#""seed": 7"#, r#""seed": 7, "bogus": 1"#);
        assert!(parse_experiment_config(bad.as_bytes()).is_err());
    }

    #[test]
    fn semantic_errors_carry_path() {
        let bad = MINIMAL.replace(r#""seed": 7"#, r#""seed": 7, "baseline_fractions": [1.0, 0.0]"#);
        assert_eq!(
            parse_experiment_config(bad.as_bytes()).unwrap_err().path,
            "baseline_fractions[1]"
        );
        let bad = MINIMAL.replace(r#""baseline""#, r#"["baseline", "union"]"#);
        assert_eq!(parse_experiment_config(bad.as_bytes()).unwrap_err().path, "datasets");
        let bad = MINIMAL.replace(r#""val": 0.1"#, r#""val": 0.3"#);
        assert_eq!(
            parse_experiment_config(bad.as_bytes()).unwrap_err().path,
            "datasets[0].split"
        );
        let bad = MINIMAL.replace(r#"{"kind": "mean"}"#, r#"{"kind": "knn", "k": 0}"#);
        assert_eq!(parse_experiment_config(bad.as_bytes()).unwrap_err().path, "predictor.k");
    }
}
