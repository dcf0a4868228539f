//! Scalar error metrics, Error Time Window (ETW) accuracy and per-document
//! error distributions.
//!
//! All errors are in centuries. The ETW around a truth `Y` with half-width
//! `alpha` is the closed window `[Y - alpha, Y + alpha]`; a prediction inside
//! it is a positive. `A(alpha) = P / (P + N)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::CenturyFloat;

/// Slack on the ETW boundary comparison, in centuries. Absorbs decimal to
/// binary rounding of values such as `0.6` (1e-7 years).
pub const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {preds} predictions vs {truths} truths")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("no predictions to score")]
    Empty,
    #[error("alpha must be >= 0, got {0}")]
    NegativeAlpha(f64),
    #[error("invalid sweep grid: {0}")]
    InvalidSweep(String),
    #[error("predictions reference unknown document `{0}`")]
    UnknownDocument(String),
    #[error("document `{0}` has no predictions")]
    EmptyGroup(String),
}

fn check_pairs(preds: &[CenturyFloat], truths: &[CenturyFloat]) -> Result<(), MetricsError> {
    if preds.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Mean absolute error in centuries.
pub fn mae(preds: &[CenturyFloat], truths: &[CenturyFloat]) -> Result<f64, MetricsError> {
    check_pairs(preds, truths)?;
    let sum: f64 = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| (p.value() - t.value()).abs())
        .sum();
    Ok(sum / preds.len() as f64)
}

/// Mean squared error in centuries squared.
pub fn mse(preds: &[CenturyFloat], truths: &[CenturyFloat]) -> Result<f64, MetricsError> {
    check_pairs(preds, truths)?;
    let sum: f64 = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| {
            let d = p.value() - t.value();
            d * d
        })
        .sum();
    Ok(sum / preds.len() as f64)
}

/// Whether `alpha` is the half-width of the window or its full span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthMode {
    #[default]
    HalfWidth,
    FullWidth,
}

impl WidthMode {
    fn half_width(self, alpha: f64) -> f64 {
        match self {
            WidthMode::HalfWidth => alpha,
            WidthMode::FullWidth => alpha / 2.0,
        }
    }
}

/// `alpha_min..=alpha_max` in steps of `alpha_step`, all in centuries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
}

impl SweepGrid {
    pub fn new(alpha_min: f64, alpha_max: f64, alpha_step: f64) -> Result<Self, MetricsError> {
        let g = Self {
            alpha_min,
            alpha_max,
            alpha_step,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let all_finite = [self.alpha_min, self.alpha_max, self.alpha_step]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(MetricsError::InvalidSweep("values must be finite".into()));
        }
        if self.alpha_min < 0.0 {
            return Err(MetricsError::NegativeAlpha(self.alpha_min));
        }
        if self.alpha_step <= 0.0 {
            return Err(MetricsError::InvalidSweep(format!(
                "alpha_step must be > 0, got {}",
                self.alpha_step
            )));
        }
        if self.alpha_min > self.alpha_max {
            return Err(MetricsError::InvalidSweep(format!(
                "alpha_min {} > alpha_max {}",
                self.alpha_min, self.alpha_max
            )));
        }
        if (self.alpha_max - self.alpha_min) / self.alpha_step > 1e6 {
            return Err(MetricsError::InvalidSweep("more than 1e6 grid points".into()));
        }
        Ok(())
    }

    /// Grid points, snapped to 12 decimals so `0.2 * 3` reads as `0.6`.
    pub fn alphas(&self) -> Vec<f64> {
        let n = ((self.alpha_max - self.alpha_min) / self.alpha_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let a = self.alpha_min + i as f64 * self.alpha_step;
                (a * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtwConfig {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub width_mode: WidthMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtwResult {
    /// The alpha as supplied (full width when the width mode says so).
    pub alpha: f64,
    pub positives: usize,
    pub negatives: usize,
    pub accuracy: f64,
}

/// True iff `|pred - truth| <= alpha`; the boundary is inclusive.
pub fn etw_contains(
    pred: CenturyFloat,
    truth: CenturyFloat,
    alpha: f64,
) -> Result<bool, MetricsError> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(MetricsError::NegativeAlpha(alpha));
    }
    Ok((pred.value() - truth.value()).abs() <= alpha + BOUNDARY_SLACK)
}

pub fn etw_accuracy(
    preds: &[CenturyFloat],
    truths: &[CenturyFloat],
    alpha: f64,
) -> Result<EtwResult, MetricsError> {
    etw_accuracy_with(preds, truths, alpha, WidthMode::HalfWidth)
}

pub fn etw_accuracy_with(
    preds: &[CenturyFloat],
    truths: &[CenturyFloat],
    alpha: f64,
    mode: WidthMode,
) -> Result<EtwResult, MetricsError> {
    check_pairs(preds, truths)?;
    let half = mode.half_width(alpha);
    let mut positives = 0;
    for (p, t) in preds.iter().zip(truths) {
        if etw_contains(*p, *t, half)? {
            positives += 1;
        }
    }
    let negatives = preds.len() - positives;
    Ok(EtwResult {
        alpha,
        positives,
        negatives,
        accuracy: positives as f64 / preds.len() as f64,
    })
}

/// Accuracy curve over the sweep grid, ordered by alpha.
pub fn etw_sweep(
    preds: &[CenturyFloat],
    truths: &[CenturyFloat],
    grid: &SweepGrid,
    mode: WidthMode,
) -> Result<Vec<EtwResult>, MetricsError> {
    grid.validate()?;
    check_pairs(preds, truths)?;
    // sorted errors let each grid point be answered by a partition point
    let mut errors: Vec<f64> = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| (p.value() - t.value()).abs())
        .collect();
    errors.sort_by(f64::total_cmp);
    let n = errors.len();
    Ok(grid
        .alphas()
        .into_iter()
        .map(|alpha| {
            let bound = mode.half_width(alpha) + BOUNDARY_SLACK;
            let positives = errors.partition_point(|e| *e <= bound);
            EtwResult {
                alpha,
                positives,
                negatives: n - positives,
                accuracy: positives as f64 / n as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaKind {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1; a single value has sigma 0.
    Sample,
}

impl std::str::FromStr for SigmaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "population" => Ok(SigmaKind::Population),
            "sample" => Ok(SigmaKind::Sample),
            other => Err(format!("unknown sigma kind `{other}` (expected population | sample)")),
        }
    }
}

pub fn std_dev(values: &[f64], kind: SigmaKind) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match kind {
        SigmaKind::Population => n as f64,
        SigmaKind::Sample if n > 1 => (n - 1) as f64,
        SigmaKind::Sample => return 0.0,
    };
    (ss / denom).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Five-number summary; inner quartiles interpolate linearly between closest
/// ranks (position `p * (n - 1)` in the sorted data). Whiskers are min/max.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        v[lo] + (v[hi] - v[lo]) * frac
    };
    Some(Quartiles {
        min: v[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentStats {
    pub doc_id: String,
    pub n_predictions: usize,
    pub mean: f64,
    pub mae: f64,
    pub sigma: f64,
    pub quartiles: Quartiles,
    pub ground_truth: f64,
}

/// Per-document mean, MAE, sigma of absolute errors and quartiles of the
/// predictions, ordered by `doc_id`.
pub fn per_document_stats(
    grouped: &BTreeMap<String, Vec<CenturyFloat>>,
    truths: &BTreeMap<String, CenturyFloat>,
    sigma: SigmaKind,
) -> Result<Vec<DocumentStats>, MetricsError> {
    grouped
        .iter()
        .map(|(doc_id, preds)| {
            let truth = truths
                .get(doc_id)
                .ok_or_else(|| MetricsError::UnknownDocument(doc_id.clone()))?;
            let values: Vec<f64> = preds.iter().map(|p| p.value()).collect();
            let q = quartiles(&values).ok_or_else(|| MetricsError::EmptyGroup(doc_id.clone()))?;
            let abs_errors: Vec<f64> = values.iter().map(|v| (v - truth.value()).abs()).collect();
            let n = values.len() as f64;
            Ok(DocumentStats {
                doc_id: doc_id.clone(),
                n_predictions: values.len(),
                mean: values.iter().sum::<f64>() / n,
                mae: abs_errors.iter().sum::<f64>() / n,
                sigma: std_dev(&abs_errors, sigma),
                quartiles: q,
                ground_truth: truth.value(),
            })
        })
        .collect()
}
