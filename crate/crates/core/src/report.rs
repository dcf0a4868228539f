//! Report assembly and the CSV tables written next to each JSON report.
//!
//! Model-facing numbers are centuries; the pairwise agreement MAE is years.
//! Every float cell uses the same six-decimal formatting as the JSON.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::agreement::{
    expert_points, expert_table, resolve_grid, AgreementConfig, AgreementError, AgreementReport,
    ExpertRow, ResponseSet,
};
use crate::harness::{ExperimentReport, Scores};
use crate::io::{csv_bytes, fmt_float, PredictionRow};
use crate::metrics::{
    self, per_document_stats, DocumentStats, EtwResult, MetricsError, SigmaKind, SweepGrid,
    WidthMode,
};
use crate::model::{year_to_century, CenturyFloat, DatasetManifest, DateError, LineKey};

/// A CSV table with preformatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        csv_bytes(&self.header, &self.rows)
    }
}

fn f(v: f64) -> String {
    fmt_float(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{} prediction(s) do not match the truth: {}", .0.len(), list(.0))]
    Unmatched(Vec<LineKey>),
    #[error("no predictions")]
    NoPredictions,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Date(#[from] DateError),
}

fn list(keys: &[LineKey]) -> String {
    keys.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ")
}

/// Ground truth for scoring: per document, optionally with the known lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub years: BTreeMap<String, i64>,
    /// When set, predictions for lines outside it are unmatched.
    pub lines: Option<BTreeSet<LineKey>>,
}

impl Truth {
    pub fn from_years(years: BTreeMap<String, i64>) -> Self {
        Self { years, lines: None }
    }

    pub fn from_manifest(m: &DatasetManifest) -> Self {
        Self {
            years: m
                .documents
                .iter()
                .map(|d| (d.doc_id.clone(), d.ground_truth_year))
                .collect(),
            lines: Some(
                m.documents
                    .iter()
                    .flat_map(|d| d.lines.iter().map(|l| LineKey::new(&d.doc_id, &l.line_id)))
                    .collect(),
            ),
        }
    }

    pub fn centuries(&self) -> Result<BTreeMap<String, CenturyFloat>, DateError> {
        self.years
            .iter()
            .map(|(d, y)| Ok((d.clone(), year_to_century(*y)?)))
            .collect()
    }

    /// Predictions whose document or line is unknown, in input order.
    pub fn unmatched(&self, preds: &[PredictionRow]) -> Vec<LineKey> {
        preds
            .iter()
            .filter(|p| {
                !self.years.contains_key(&p.key.doc_id)
                    || self.lines.as_ref().is_some_and(|l| !l.contains(&p.key))
            })
            .map(|p| p.key.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSettings {
    pub sweep: SweepGrid,
    pub width_mode: WidthMode,
    pub sigma: SigmaKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMetrics {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub units: &'static str,
    pub config: EvalSettings,
    pub metrics: PointMetrics,
    pub etw_curve: Vec<EtwResult>,
    pub doc_stats: Vec<DocumentStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementReport>,
}

impl EvalReport {
    /// `MAE 0.5637  MSE 0.4612` style line for terminals.
    pub fn summary(&self) -> String {
        format!(
            "n {}  MAE {:.4}  MSE {:.4}",
            self.metrics.n, self.metrics.mae, self.metrics.mse
        )
    }
}

fn group_by_doc(preds: &[PredictionRow]) -> BTreeMap<String, Vec<CenturyFloat>> {
    let mut g: BTreeMap<String, Vec<CenturyFloat>> = BTreeMap::new();
    for p in preds {
        g.entry(p.key.doc_id.clone()).or_default().push(p.pred);
    }
    g
}

/// Scores point predictions: MAE/MSE, the ETW curve and per-document stats.
pub fn evaluate(
    preds: &[PredictionRow],
    truth: &Truth,
    settings: EvalSettings,
) -> Result<EvalReport, ReportError> {
    if preds.is_empty() {
        return Err(ReportError::NoPredictions);
    }
    let unmatched = truth.unmatched(preds);
    if !unmatched.is_empty() {
        return Err(ReportError::Unmatched(unmatched));
    }
    let docs = truth.centuries()?;
    let p: Vec<CenturyFloat> = preds.iter().map(|r| r.pred).collect();
    let t: Vec<CenturyFloat> = preds.iter().map(|r| docs[&r.key.doc_id]).collect();
    Ok(EvalReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: None,
        units: "century",
        config: settings,
        metrics: PointMetrics {
            n: p.len(),
            mae: metrics::mae(&p, &t)?,
            mse: metrics::mse(&p, &t)?,
        },
        etw_curve: metrics::etw_sweep(&p, &t, &settings.sweep, settings.width_mode)?,
        doc_stats: per_document_stats(&group_by_doc(preds), &docs, settings.sigma)?,
        agreement: None,
    })
}

pub fn etw_table(curve: &[EtwResult]) -> Table {
    let mut t = Table::new(&["alpha", "positives", "negatives", "accuracy"]);
    for r in curve {
        t.rows.push(vec![
            f(r.alpha),
            r.positives.to_string(),
            r.negatives.to_string(),
            f(r.accuracy),
        ]);
    }
    t
}

pub fn doc_stats_table(stats: &[DocumentStats]) -> Table {
    let mut t = Table::new(&[
        "doc_id", "n", "mean", "mae", "sigma", "min", "q1", "median", "q3", "max", "truth",
    ]);
    for s in stats {
        let q = &s.quartiles;
        t.rows.push(vec![
            s.doc_id.clone(),
            s.n_predictions.to_string(),
            f(s.mean),
            f(s.mae),
            f(s.sigma),
            f(q.min),
            f(q.q1),
            f(q.median),
            f(q.q3),
            f(q.max),
            f(s.ground_truth),
        ]);
    }
    t
}

/// Per-expert MAE in centuries, with and without substituted abstentions.
pub fn expert_table_csv(rows: &[ExpertRow]) -> Table {
    let mut t = Table::new(&["expert_id", "mae_incl", "mae_excl", "n_empty"]);
    for r in rows {
        t.rows.push(vec![
            r.expert_id.clone(),
            f(r.mae.mae_incl),
            f(r.mae.mae_excl),
            r.mae.n_empty.to_string(),
        ]);
    }
    t
}

pub fn splits_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&["dataset", "unit", "train", "val", "test"]);
    for d in &report.config.datasets {
        let c = &report.splits[&d.name];
        let unit = match c.unit {
            Some(crate::harness::SplitUnit::Document) => "document",
            Some(crate::harness::SplitUnit::Line) => "line",
            None => "manifest",
        };
        t.rows.push(vec![
            d.name.clone(),
            unit.into(),
            c.train.to_string(),
            c.val.to_string(),
            c.test.to_string(),
        ]);
    }
    t
}

pub fn baseline_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&["dataset", "pct", "n_train", "n_test", "mae", "mse"]);
    for b in &report.baseline {
        for r in &b.rows {
            t.rows.push(vec![
                b.dataset.clone(),
                f(r.pct),
                r.n_train.to_string(),
                r.test.n.to_string(),
                f(r.test.mae),
                f(r.test.mse),
            ]);
        }
    }
    t
}

pub fn transfer_table(report: &ExperimentReport) -> Option<Table> {
    let tr = report.transfer.as_ref()?;
    let mut t = Table::new(&[
        "source", "target", "pct", "n_source_train", "n_target_train", "n_test", "mae", "mse",
    ]);
    for r in &tr.rows {
        t.rows.push(vec![
            tr.source.clone(),
            tr.target.clone(),
            f(r.pct),
            tr.n_source_train.to_string(),
            r.n_target_train.to_string(),
            r.test.n.to_string(),
            f(r.test.mae),
            f(r.test.mse),
        ]);
    }
    Some(t)
}

/// Six metric columns per row: MAE/MSE on test A, test B and both.
pub fn union_table(report: &ExperimentReport) -> Option<Table> {
    let u = report.union.as_ref()?;
    let mut t = Table::new(&[
        "a", "b", "pct", "n_train_a", "n_train_b", "balanced", "mae_a", "mse_a", "mae_b", "mse_b",
        "mae_ab", "mse_ab",
    ]);
    for r in &u.rows {
        t.rows.push(vec![
            u.a.clone(),
            u.b.clone(),
            f(r.pct),
            r.n_train_a.to_string(),
            r.n_train_b.to_string(),
            r.balanced.to_string(),
            f(r.test_a.mae),
            f(r.test_a.mse),
            f(r.test_b.mae),
            f(r.test_b.mse),
            f(r.test_ab.mae),
            f(r.test_ab.mse),
        ]);
    }
    Some(t)
}

/// Every ETW curve of an experiment in long form; `None` without a sweep.
pub fn experiment_etw_table(report: &ExperimentReport) -> Option<Table> {
    report.config.etw?;
    let mut t = Table::new(&[
        "protocol", "test_set", "pct", "alpha", "positives", "negatives", "accuracy",
    ]);
    let mut push = |protocol: &str, test_set: &str, pct: f64, s: &Scores| {
        for e in s.etw.iter().flatten() {
            t.rows.push(vec![
                protocol.into(),
                test_set.into(),
                f(pct),
                f(e.alpha),
                e.positives.to_string(),
                e.negatives.to_string(),
                f(e.accuracy),
            ]);
        }
    };
    for b in &report.baseline {
        for r in &b.rows {
            push("baseline", &b.dataset, r.pct, &r.test);
        }
    }
    if let Some(tr) = &report.transfer {
        for r in &tr.rows {
            push("transfer", &tr.target, r.pct, &r.test);
        }
    }
    if let Some(u) = &report.union {
        let ab = format!("{}+{}", u.a, u.b);
        for r in &u.rows {
            push("union", &u.a, r.pct, &r.test_a);
            push("union", &u.b, r.pct, &r.test_b);
            push("union", &ab, r.pct, &r.test_ab);
        }
    }
    Some(t)
}

/// One document's error summary for a prediction source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub mae: f64,
    pub sigma: f64,
    pub stats: DocumentStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub doc_id: String,
    pub truth: f64,
    pub model: Option<GroupStats>,
    pub experts: Option<GroupStats>,
    pub best: Option<GroupStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub tool_version: String,
    pub units: &'static str,
    pub best_expert: String,
    pub experts: Vec<ExpertRow>,
    pub policy: crate::agreement::SubstitutionPolicy,
    pub point_rule: crate::model::PointRule,
    pub rows: Vec<CompareRow>,
}

/// Lowest `mae_incl`, ties to the lexicographically first expert id.
pub fn best_expert(rows: &[ExpertRow]) -> Option<&ExpertRow> {
    rows.iter().min_by(|a, b| {
        a.mae
            .mae_incl
            .total_cmp(&b.mae.mae_incl)
            .then_with(|| a.expert_id.cmp(&b.expert_id))
    })
}

fn stats_map(
    grouped: &BTreeMap<String, Vec<CenturyFloat>>,
    truths: &BTreeMap<String, CenturyFloat>,
    sigma: SigmaKind,
) -> Result<BTreeMap<String, GroupStats>, MetricsError> {
    Ok(per_document_stats(grouped, truths, sigma)?
        .into_iter()
        .map(|s| {
            (
                s.doc_id.clone(),
                GroupStats {
                    mae: s.mae,
                    sigma: s.sigma,
                    stats: s,
                },
            )
        })
        .collect())
}

/// Per-document error stats for the model, the pooled experts and the best
/// expert. Expert values are the answered intervals reduced by the point
/// rule; abstentions contribute nothing here.
pub fn compare(
    preds: &[PredictionRow],
    responses: &ResponseSet,
    truth: &Truth,
    config: &AgreementConfig,
    sigma: SigmaKind,
) -> Result<CompareReport, ReportError> {
    if preds.is_empty() {
        return Err(ReportError::NoPredictions);
    }
    let unmatched = truth.unmatched(preds);
    if !unmatched.is_empty() {
        return Err(ReportError::Unmatched(unmatched));
    }
    let truths = truth.centuries()?;
    let grid = resolve_grid(responses, &truths, config)?;
    let experts = expert_table(responses, &truths, &grid, config)?;
    let best = best_expert(&experts)
        .ok_or(AgreementError::TooFewExperts(0))?
        .expert_id
        .clone();
    let points = expert_points(responses, &truths, config.point_rule)?;

    let model = stats_map(&group_by_doc(preds), &truths, sigma)?;
    let mut pooled: BTreeMap<String, Vec<CenturyFloat>> = BTreeMap::new();
    let mut best_group: BTreeMap<String, Vec<CenturyFloat>> = BTreeMap::new();
    for (e, pts) in &points {
        for (k, v) in pts {
            let c = CenturyFloat::new(*v)?;
            pooled.entry(k.doc_id.clone()).or_default().push(c);
            if *e == best {
                best_group.entry(k.doc_id.clone()).or_default().push(c);
            }
        }
    }
    let pooled = stats_map(&pooled, &truths, sigma)?;
    let best_stats = stats_map(&best_group, &truths, sigma)?;

    let docs: BTreeSet<&String> = model.keys().chain(pooled.keys()).collect();
    let rows = docs
        .into_iter()
        .map(|d| CompareRow {
            doc_id: d.clone(),
            truth: truths[d].value(),
            model: model.get(d).cloned(),
            experts: pooled.get(d).cloned(),
            best: best_stats.get(d).cloned(),
        })
        .collect();
    Ok(CompareReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        units: "century",
        best_expert: best,
        experts,
        policy: config.policy,
        point_rule: config.point_rule,
        rows,
    })
}

/// Side-by-side MAE and sigma for model, expert pool and best expert.
pub fn compare_table(report: &CompareReport) -> Table {
    let mut t = Table::new(&[
        "doc_id", "truth", "model_mae", "model_sigma", "experts_mae", "experts_sigma", "best_mae",
        "best_sigma",
    ]);
    let pair = |g: &Option<GroupStats>| (opt(g.as_ref().map(|g| g.mae)), opt(g.as_ref().map(|g| g.sigma)));
    for r in &report.rows {
        let (mm, ms) = pair(&r.model);
        let (em, es) = pair(&r.experts);
        let (bm, bs) = pair(&r.best);
        t.rows.push(vec![r.doc_id.clone(), f(r.truth), mm, ms, em, es, bm, bs]);
    }
    t
}

/// Box-plot data: quartiles of the dated values per document and source.
pub fn boxplot_table(report: &CompareReport) -> Table {
    let mut t = Table::new(&[
        "doc_id", "source", "n", "min", "q1", "median", "q3", "max", "truth",
    ]);
    for r in &report.rows {
        for (source, g) in [("model", &r.model), ("experts", &r.experts), ("best", &r.best)] {
            if let Some(g) = g {
                let q = &g.stats.quartiles;
                t.rows.push(vec![
                    r.doc_id.clone(),
                    source.into(),
                    g.stats.n_predictions.to_string(),
                    f(q.min),
                    f(q.q1),
                    f(q.median),
                    f(q.q3),
                    f(q.max),
                    f(r.truth),
                ]);
            }
        }
    }
    t
}
