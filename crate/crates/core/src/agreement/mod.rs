//! Human-expert evaluation and inter-rater agreement.
//!
//! Experts answer each line image with a closed date interval or abstain.
//! Per-expert MAE is reported twice: over answered lines only, and with each
//! abstention replaced by a substitute error chosen by [`SubstitutionPolicy`].
//! Agreement indices (pairwise MAE, pairwise Spearman/Pearson, Fleiss' kappa
//! over a discretised time axis) are assembled by [`agreement_report`].

pub mod correlation;
pub mod grid;
pub mod kappa;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CenturyFloat, DateInterval, LineKey, PointRule};

pub use correlation::{average_ranks, pearson, spearman, CorrelationError};
pub use grid::{discretize_answer, GridError, TimeGrid, DEFAULT_STEP_YEARS};
pub use kappa::{fleiss_kappa, fleiss_kappa_counts, KappaError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgreementError {
    #[error("duplicate response from `{expert_id}` for {item}")]
    DuplicateResponse { expert_id: String, item: LineKey },
    #[error("response for unknown line {0}")]
    UnknownLine(LineKey),
    #[error("no ground truth for document `{0}`")]
    UnknownDocument(String),
    #[error("expert `{0}` abstained on every line")]
    AllAbstained(String),
    #[error("no substitute error available for {0}")]
    MissingSubstitution(LineKey),
    #[error("need at least 2 experts, got {0}")]
    TooFewExperts(usize),
    #[error("no expert pair shares an answered line")]
    NoUsablePair,
    #[error("invalid substitution policy: {0}")]
    BadPolicy(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Kappa(#[from] KappaError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Answer {
    Interval(DateInterval),
    Abstain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertResponse {
    pub expert_id: String,
    pub doc_id: String,
    pub line_id: String,
    pub answer: Answer,
}

impl ExpertResponse {
    pub fn key(&self) -> LineKey {
        LineKey::new(&self.doc_id, &self.line_id)
    }
}

/// Responses with `(expert_id, doc_id, line_id)` unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResponseSet {
    by_expert: BTreeMap<String, BTreeMap<LineKey, Answer>>,
}

impl ResponseSet {
    pub fn new(responses: impl IntoIterator<Item = ExpertResponse>) -> Result<Self, AgreementError> {
        let mut by_expert: BTreeMap<String, BTreeMap<LineKey, Answer>> = BTreeMap::new();
        for r in responses {
            let key = r.key();
            let answers = by_expert.entry(r.expert_id.clone()).or_default();
            if answers.insert(key.clone(), r.answer).is_some() {
                return Err(AgreementError::DuplicateResponse {
                    expert_id: r.expert_id,
                    item: key,
                });
            }
        }
        Ok(Self { by_expert })
    }

    pub fn experts(&self) -> impl Iterator<Item = &str> {
        self.by_expert.keys().map(String::as_str)
    }

    pub fn n_experts(&self) -> usize {
        self.by_expert.len()
    }

    pub fn answers(&self, expert_id: &str) -> Option<&BTreeMap<LineKey, Answer>> {
        self.by_expert.get(expert_id)
    }

    /// Every line any expert responded to (answered or abstained).
    pub fn roster(&self) -> BTreeSet<LineKey> {
        self.by_expert
            .values()
            .flat_map(|m| m.keys().cloned())
            .collect()
    }

    pub fn intervals(&self) -> impl Iterator<Item = &DateInterval> {
        self.by_expert.values().flat_map(|m| {
            m.values().filter_map(|a| match a {
                Answer::Interval(i) => Some(i),
                Answer::Abstain => None,
            })
        })
    }
}

/// Absolute error of one line, or an abstention marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ItemError {
    Answered(f64),
    Abstain,
}

fn truth_of(
    truths: &BTreeMap<String, CenturyFloat>,
    key: &LineKey,
) -> Result<CenturyFloat, AgreementError> {
    truths
        .get(&key.doc_id)
        .copied()
        .ok_or_else(|| AgreementError::UnknownDocument(key.doc_id.clone()))
}

/// Errors of one expert over the roster. Roster lines without a response are
/// abstentions.
pub fn expert_errors(
    answers: &BTreeMap<LineKey, Answer>,
    roster: &BTreeSet<LineKey>,
    truths: &BTreeMap<String, CenturyFloat>,
    rule: PointRule,
) -> Result<BTreeMap<LineKey, ItemError>, AgreementError> {
    if let Some(unknown) = answers.keys().find(|k| !roster.contains(*k)) {
        return Err(AgreementError::UnknownLine(unknown.clone()));
    }
    roster
        .iter()
        .map(|key| {
            let truth = truth_of(truths, key)?;
            let err = match answers.get(key) {
                Some(Answer::Interval(i)) => {
                    ItemError::Answered((rule.point(i, truth).value() - truth.value()).abs())
                }
                Some(Answer::Abstain) | None => ItemError::Abstain,
            };
            Ok((key.clone(), err))
        })
        .collect()
}

/// How an abstention is converted into an error value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SubstitutionPolicy {
    /// Largest error any expert made on the same line. Lines nobody answered
    /// fall back to the largest error observed anywhere.
    #[default]
    PerItemMaxObserved,
    /// Distance from the truth to the farther bound of the time grid.
    DatasetMaxPossible,
    /// A fixed error in centuries.
    Constant(f64),
}

impl fmt::Display for SubstitutionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubstitutionPolicy::PerItemMaxObserved => f.write_str("per-item-max-observed"),
            SubstitutionPolicy::DatasetMaxPossible => f.write_str("dataset-max-possible"),
            SubstitutionPolicy::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl std::str::FromStr for SubstitutionPolicy {
    type Err = AgreementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-item-max-observed" => Ok(SubstitutionPolicy::PerItemMaxObserved),
            "dataset-max-possible" => Ok(SubstitutionPolicy::DatasetMaxPossible),
            other => {
                let c = other
                    .strip_prefix("constant:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| AgreementError::BadPolicy(other.to_string()))?;
                if !c.is_finite() || c < 0.0 {
                    return Err(AgreementError::BadPolicy(format!("constant must be >= 0, got {c}")));
                }
                Ok(SubstitutionPolicy::Constant(c))
            }
        }
    }
}

impl Serialize for SubstitutionPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SubstitutionPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Substitute error per roster line under `policy`.
pub fn substitution_values(
    policy: SubstitutionPolicy,
    errors: &BTreeMap<String, BTreeMap<LineKey, ItemError>>,
    truths: &BTreeMap<String, CenturyFloat>,
    grid: &TimeGrid,
) -> Result<BTreeMap<LineKey, f64>, AgreementError> {
    let roster: BTreeSet<&LineKey> = errors.values().flat_map(|m| m.keys()).collect();
    match policy {
        SubstitutionPolicy::Constant(c) => {
            if !c.is_finite() || c < 0.0 {
                return Err(AgreementError::BadPolicy(format!("constant must be >= 0, got {c}")));
            }
            Ok(roster.into_iter().map(|k| (k.clone(), c)).collect())
        }
        SubstitutionPolicy::DatasetMaxPossible => roster
            .into_iter()
            .map(|k| {
                let y = truth_of(truths, k)?.years();
                let far = (y - grid.origin as f64).abs().max((grid.end() as f64 - y).abs());
                Ok((k.clone(), far / 100.0))
            })
            .collect(),
        SubstitutionPolicy::PerItemMaxObserved => {
            let mut per_item: BTreeMap<&LineKey, f64> = BTreeMap::new();
            let mut global: Option<f64> = None;
            for m in errors.values() {
                for (k, e) in m {
                    if let ItemError::Answered(v) = e {
                        let slot = per_item.entry(k).or_insert(*v);
                        *slot = slot.max(*v);
                        global = Some(global.map_or(*v, |g| g.max(*v)));
                    }
                }
            }
            roster
                .into_iter()
                .map(|k| {
                    per_item
                        .get(k)
                        .copied()
                        .or(global)
                        .map(|v| (k.clone(), v))
                        .ok_or_else(|| AgreementError::MissingSubstitution(k.clone()))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertMae {
    pub mae_incl: f64,
    pub mae_excl: f64,
    pub n_empty: usize,
}

/// MAE including substituted abstentions and excluding them.
pub fn expert_mae(
    expert_id: &str,
    errors: &BTreeMap<LineKey, ItemError>,
    substitutes: &BTreeMap<LineKey, f64>,
) -> Result<ExpertMae, AgreementError> {
    let mut answered_sum = 0.0;
    let mut n_answered = 0usize;
    let mut substituted_sum = 0.0;
    let mut n_empty = 0usize;
    for (k, e) in errors {
        match e {
            ItemError::Answered(v) => {
                answered_sum += v;
                n_answered += 1;
            }
            ItemError::Abstain => {
                substituted_sum += substitutes
                    .get(k)
                    .ok_or_else(|| AgreementError::MissingSubstitution(k.clone()))?;
                n_empty += 1;
            }
        }
    }
    if n_answered == 0 {
        return Err(AgreementError::AllAbstained(expert_id.to_string()));
    }
    Ok(ExpertMae {
        mae_incl: (answered_sum + substituted_sum) / (n_answered + n_empty) as f64,
        mae_excl: answered_sum / n_answered as f64,
        n_empty,
    })
}

/// Answered point values per expert, in centuries.
pub fn expert_points(
    responses: &ResponseSet,
    truths: &BTreeMap<String, CenturyFloat>,
    rule: PointRule,
) -> Result<BTreeMap<String, BTreeMap<LineKey, f64>>, AgreementError> {
    responses
        .by_expert
        .iter()
        .map(|(expert, answers)| {
            let mut pts = BTreeMap::new();
            for (k, a) in answers {
                if let Answer::Interval(i) = a {
                    let truth = truth_of(truths, k)?;
                    pts.insert(k.clone(), rule.point(i, truth).value());
                }
            }
            Ok((expert.clone(), pts))
        })
        .collect()
}

/// Mean of a per-pair index over unordered expert pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseMean {
    pub value: f64,
    pub pairs_used: usize,
    pub warnings: Vec<String>,
}

fn common_values(
    a: &BTreeMap<LineKey, f64>,
    b: &BTreeMap<LineKey, f64>,
) -> (Vec<f64>, Vec<f64>) {
    a.iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| (*va, *vb)))
        .unzip()
}

fn pairwise_mean(
    points: &BTreeMap<String, BTreeMap<LineKey, f64>>,
    index: impl Fn(&[f64], &[f64]) -> Result<f64, String>,
) -> Result<PairwiseMean, AgreementError> {
    if points.len() < 2 {
        return Err(AgreementError::TooFewExperts(points.len()));
    }
    let experts: Vec<(&String, &BTreeMap<LineKey, f64>)> = points.iter().collect();
    let mut sum = 0.0;
    let mut pairs_used = 0;
    let mut warnings = Vec::new();
    for (i, (ea, pa)) in experts.iter().enumerate() {
        for (eb, pb) in &experts[i + 1..] {
            let (xa, xb) = common_values(pa, pb);
            match index(&xa, &xb) {
                Ok(v) => {
                    sum += v;
                    pairs_used += 1;
                }
                Err(why) => warnings.push(format!("pair ({ea}, {eb}) excluded: {why}")),
            }
        }
    }
    if pairs_used == 0 {
        return Err(AgreementError::NoUsablePair);
    }
    Ok(PairwiseMean {
        value: sum / pairs_used as f64,
        pairs_used,
        warnings,
    })
}

/// Mean pairwise MAE in years, one expert's dates taken as truth for the
/// other, over lines both answered.
pub fn pairwise_mae(
    points: &BTreeMap<String, BTreeMap<LineKey, f64>>,
) -> Result<PairwiseMean, AgreementError> {
    pairwise_mean(points, |a, b| {
        if a.is_empty() {
            return Err("no common answered lines".into());
        }
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        Ok(s / a.len() as f64 * 100.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

pub fn mean_pairwise_corr(
    points: &BTreeMap<String, BTreeMap<LineKey, f64>>,
    method: CorrelationMethod,
) -> Result<PairwiseMean, AgreementError> {
    pairwise_mean(points, |a, b| {
        let r = match method {
            CorrelationMethod::Pearson => pearson(a, b),
            CorrelationMethod::Spearman => spearman(a, b),
        };
        r.map_err(|e| e.to_string())
    })
}

/// Binary label matrix for kappa: one row per (line, bin), one column per
/// expert (sorted by id). Abstentions contribute all-zero rows.
pub fn kappa_labels(
    responses: &ResponseSet,
    grid: &TimeGrid,
) -> Result<Vec<Vec<bool>>, AgreementError> {
    let roster = responses.roster();
    let mut per_expert: Vec<BTreeMap<&LineKey, Vec<bool>>> = Vec::new();
    for answers in responses.by_expert.values() {
        let mut m = BTreeMap::new();
        for key in &roster {
            let bits = match answers.get(key) {
                Some(Answer::Interval(i)) => discretize_answer(i, grid)?,
                _ => vec![false; grid.n_bins],
            };
            m.insert(key, bits);
        }
        per_expert.push(m);
    }
    let mut rows = Vec::with_capacity(roster.len() * grid.n_bins);
    for key in &roster {
        for b in 0..grid.n_bins {
            rows.push(per_expert.iter().map(|m| m[key][b]).collect());
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgreementConfig {
    #[serde(default = "default_step")]
    pub grid_step: i64,
    /// Explicit grid; when absent the tightest covering grid is used.
    #[serde(default)]
    pub grid: Option<TimeGrid>,
    #[serde(default)]
    pub policy: SubstitutionPolicy,
    #[serde(default)]
    pub point_rule: PointRule,
}

fn default_step() -> i64 {
    DEFAULT_STEP_YEARS
}

impl Default for AgreementConfig {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_STEP_YEARS,
            grid: None,
            policy: SubstitutionPolicy::default(),
            point_rule: PointRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertRow {
    pub expert_id: String,
    #[serde(flatten)]
    pub mae: ExpertMae,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    /// Years.
    pub mean_pairwise_mae: Option<f64>,
    pub mean_pairwise_spearman: Option<f64>,
    pub mean_pairwise_pearson: Option<f64>,
    /// `None` when expected agreement is 1.
    pub fleiss_kappa: Option<f64>,
    pub kappa_degenerate: bool,
    pub n_items: usize,
    pub experts: Vec<ExpertRow>,
    pub grid: TimeGrid,
    pub policy: SubstitutionPolicy,
    pub point_rule: PointRule,
    pub warnings: Vec<String>,
}

/// Grid for a response set: explicit if configured, else the tightest grid
/// covering every answer endpoint and every truth.
pub fn resolve_grid(
    responses: &ResponseSet,
    truths: &BTreeMap<String, CenturyFloat>,
    config: &AgreementConfig,
) -> Result<TimeGrid, AgreementError> {
    if let Some(g) = config.grid {
        return Ok(TimeGrid::new(g.origin, g.step, g.n_bins)?);
    }
    let docs: BTreeSet<String> = responses.roster().into_iter().map(|k| k.doc_id).collect();
    let mut years: Vec<f64> = responses
        .intervals()
        .flat_map(|i| [i.lo().years(), i.hi().years()])
        .collect();
    for d in &docs {
        years.push(
            truths
                .get(d)
                .ok_or_else(|| AgreementError::UnknownDocument(d.clone()))?
                .years(),
        );
    }
    Ok(TimeGrid::covering(years.into_iter().map(|y| y.round()), config.grid_step)?)
}

/// Per-expert errors for every expert over the shared roster.
pub fn all_expert_errors(
    responses: &ResponseSet,
    truths: &BTreeMap<String, CenturyFloat>,
    rule: PointRule,
) -> Result<BTreeMap<String, BTreeMap<LineKey, ItemError>>, AgreementError> {
    let roster = responses.roster();
    responses
        .by_expert
        .iter()
        .map(|(e, answers)| Ok((e.clone(), expert_errors(answers, &roster, truths, rule)?)))
        .collect()
}

/// Per-expert MAE rows (incl./excl. abstentions) under the configured policy.
pub fn expert_table(
    responses: &ResponseSet,
    truths: &BTreeMap<String, CenturyFloat>,
    grid: &TimeGrid,
    config: &AgreementConfig,
) -> Result<Vec<ExpertRow>, AgreementError> {
    let errors = all_expert_errors(responses, truths, config.point_rule)?;
    let subs = substitution_values(config.policy, &errors, truths, grid)?;
    errors
        .iter()
        .map(|(e, errs)| {
            Ok(ExpertRow {
                expert_id: e.clone(),
                mae: expert_mae(e, errs, &subs)?,
            })
        })
        .collect()
}

pub fn agreement_report(
    responses: &ResponseSet,
    truths: &BTreeMap<String, CenturyFloat>,
    config: &AgreementConfig,
) -> Result<AgreementReport, AgreementError> {
    if responses.n_experts() < 2 {
        return Err(AgreementError::TooFewExperts(responses.n_experts()));
    }
    let grid = resolve_grid(responses, truths, config)?;
    let experts = expert_table(responses, truths, &grid, config)?;
    let points = expert_points(responses, truths, config.point_rule)?;

    let mut warnings = Vec::new();
    let mut collect = |r: Result<PairwiseMean, AgreementError>, name: &str| match r {
        Ok(pm) => {
            warnings.extend(pm.warnings.into_iter().map(|w| format!("{name}: {w}")));
            Some(pm.value)
        }
        Err(AgreementError::NoUsablePair) => {
            warnings.push(format!("{name}: no usable expert pair"));
            None
        }
        Err(_) => None,
    };
    let mean_pairwise_mae = collect(pairwise_mae(&points), "pairwise_mae");
    let mean_pairwise_spearman = collect(
        mean_pairwise_corr(&points, CorrelationMethod::Spearman),
        "spearman",
    );
    let mean_pairwise_pearson = collect(
        mean_pairwise_corr(&points, CorrelationMethod::Pearson),
        "pearson",
    );

    let labels = kappa_labels(responses, &grid)?;
    let (fleiss_kappa, kappa_degenerate) = match kappa::fleiss_kappa(&labels) {
        Ok(k) => (Some(k), false),
        Err(KappaError::Degenerate) => {
            warnings.push("fleiss_kappa: expected agreement is 1, kappa undefined".into());
            (None, true)
        }
        Err(e) => return Err(e.into()),
    };

    Ok(AgreementReport {
        mean_pairwise_mae,
        mean_pairwise_spearman,
        mean_pairwise_pearson,
        fleiss_kappa,
        kappa_degenerate,
        n_items: labels.len(),
        experts,
        grid,
        policy: config.policy,
        point_rule: config.point_rule,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::year_to_century;

    fn resp(e: &str, d: &str, l: &str, a: Option<(i64, i64)>) -> ExpertResponse {
        ExpertResponse {
            expert_id: e.into(),
            doc_id: d.into(),
            line_id: l.into(),
            answer: match a {
                Some((lo, hi)) => Answer::Interval(DateInterval::from_years(lo, hi).unwrap()),
                None => Answer::Abstain,
            },
        }
    }

    fn truths(v: &[(&str, i64)]) -> BTreeMap<String, CenturyFloat> {
        v.iter()
            .map(|(d, y)| (d.to_string(), year_to_century(*y).unwrap()))
            .collect()
    }

    #[test]
    fn expert_errors_examples() {
        let t = truths(&[("A", -150), ("B", -100)]);
        let set = ResponseSet::new([
            resp("e1", "A", "1", Some((-160, -140))),
            resp("e1", "B", "1", Some((-200, -100))),
            resp("e1", "B", "2", None),
        ])
        .unwrap();
        let errs = expert_errors(set.answers("e1").unwrap(), &set.roster(), &t, PointRule::Midpoint).unwrap();
        let v: Vec<ItemError> = errs.values().copied().collect();
        assert!(matches!(v[0], ItemError::Answered(e) if e.abs() < 1e-12));
        assert!(matches!(v[1], ItemError::Answered(e) if (e - 0.5).abs() < 1e-12));
        assert_eq!(v[2], ItemError::Abstain);
    }

    #[test]
    fn unknown_line_rejected() {
        let t = truths(&[("A", -150)]);
        let set = ResponseSet::new([resp("e1", "A", "9", Some((-160, -140)))]).unwrap();
        let roster: BTreeSet<LineKey> = [LineKey::new("A", "1")].into();
        assert_eq!(
            expert_errors(set.answers("e1").unwrap(), &roster, &t, PointRule::Midpoint),
            Err(AgreementError::UnknownLine(LineKey::new("A", "9")))
        );
    }

    #[test]
    fn duplicate_response_rejected() {
        let r = ResponseSet::new([
            resp("e1", "A", "1", Some((-160, -140))),
            resp("e1", "A", "1", None),
        ]);
        assert!(matches!(r, Err(AgreementError::DuplicateResponse { .. })));
    }

    #[test]
    fn constant_policy_example() {
        let mut errs = BTreeMap::new();
        errs.insert(LineKey::new("A", "1"), ItemError::Answered(0.4));
        errs.insert(LineKey::new("A", "2"), ItemError::Answered(0.6));
        errs.insert(LineKey::new("A", "3"), ItemError::Abstain);
        let mut all = BTreeMap::new();
        all.insert("e".to_string(), errs.clone());
        let grid = TimeGrid::new(-300, 25, 4).unwrap();
        let subs = substitution_values(SubstitutionPolicy::Constant(2.0), &all, &BTreeMap::new(), &grid).unwrap();
        let m = expert_mae("e", &errs, &subs).unwrap();
        assert!((m.mae_excl - 0.5).abs() < 1e-12);
        assert!((m.mae_incl - 1.0).abs() < 1e-12);
        assert_eq!(m.n_empty, 1);
    }

    #[test]
    fn no_abstentions_incl_equals_excl() {
        let mut errs = BTreeMap::new();
        errs.insert(LineKey::new("A", "1"), ItemError::Answered(0.3));
        errs.insert(LineKey::new("A", "2"), ItemError::Answered(0.9));
        let m = expert_mae("e", &errs, &BTreeMap::new()).unwrap();
        assert_eq!(m.mae_incl, m.mae_excl);
        assert_eq!(m.n_empty, 0);
    }

    #[test]
    fn all_abstained_is_error() {
        let mut errs = BTreeMap::new();
        errs.insert(LineKey::new("A", "1"), ItemError::Abstain);
        let mut subs = BTreeMap::new();
        subs.insert(LineKey::new("A", "1"), 1.0);
        assert_eq!(
            expert_mae("e", &errs, &subs),
            Err(AgreementError::AllAbstained("e".into()))
        );
    }

    #[test]
    fn per_item_max_observed_enumeration() {
        // item 1: errors e1 0.2, e2 0.7, e3 abstain -> 0.7
        // item 2: e1 abstain, e2 0.1, e3 0.4       -> 0.4
        // item 3: nobody answered                  -> global max 0.7
        let k = |l: &str| LineKey::new("A", l);
        let mut all: BTreeMap<String, BTreeMap<LineKey, ItemError>> = BTreeMap::new();
        all.insert("e1".into(), [(k("1"), ItemError::Answered(0.2)), (k("2"), ItemError::Abstain), (k("3"), ItemError::Abstain)].into());
        all.insert("e2".into(), [(k("1"), ItemError::Answered(0.7)), (k("2"), ItemError::Answered(0.1)), (k("3"), ItemError::Abstain)].into());
        all.insert("e3".into(), [(k("1"), ItemError::Abstain), (k("2"), ItemError::Answered(0.4)), (k("3"), ItemError::Abstain)].into());
        let grid = TimeGrid::new(-300, 25, 4).unwrap();
        let subs = substitution_values(SubstitutionPolicy::PerItemMaxObserved, &all, &BTreeMap::new(), &grid).unwrap();
        assert_eq!(subs[&k("1")], 0.7);
        assert_eq!(subs[&k("2")], 0.4);
        assert_eq!(subs[&k("3")], 0.7);
        let e1 = expert_mae("e1", &all["e1"], &subs).unwrap();
        assert!((e1.mae_incl - (0.2 + 0.4 + 0.7) / 3.0).abs() < 1e-12);
        assert!((e1.mae_excl - 0.2).abs() < 1e-12);
        assert_eq!(e1.n_empty, 2);
    }

    #[test]
    fn dataset_max_possible_uses_grid_bounds() {
        let t = truths(&[("A", -150)]);
        let mut all: BTreeMap<String, BTreeMap<LineKey, ItemError>> = BTreeMap::new();
        all.insert("e".into(), [(LineKey::new("A", "1"), ItemError::Abstain)].into());
        let grid = TimeGrid::new(-300, 25, 8).unwrap(); // [-300, -100]
        let subs = substitution_values(SubstitutionPolicy::DatasetMaxPossible, &all, &t, &grid).unwrap();
        assert!((subs[&LineKey::new("A", "1")] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("constant:2.5".parse::<SubstitutionPolicy>().unwrap(), SubstitutionPolicy::Constant(2.5));
        assert!("constant:-1".parse::<SubstitutionPolicy>().is_err());
        assert!("bogus".parse::<SubstitutionPolicy>().is_err());
        for p in [SubstitutionPolicy::PerItemMaxObserved, SubstitutionPolicy::DatasetMaxPossible, SubstitutionPolicy::Constant(3.0)] {
            assert_eq!(p.to_string().parse::<SubstitutionPolicy>().unwrap(), p);
        }
    }

    fn points(v: &[(&str, &[(&str, f64)])]) -> BTreeMap<String, BTreeMap<LineKey, f64>> {
        v.iter()
            .map(|(e, ps)| {
                (
                    e.to_string(),
                    ps.iter().map(|(l, x)| (LineKey::new("A", *l), *x)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn pairwise_mae_examples() {
        let same = points(&[("a", &[("1", -1.0), ("2", -2.0)]), ("b", &[("1", -1.0), ("2", -2.0)])]);
        assert_eq!(pairwise_mae(&same).unwrap().value, 0.0);
        let shifted = points(&[("a", &[("1", -1.0), ("2", -2.0)]), ("b", &[("1", -0.5), ("2", -1.5)])]);
        assert!((pairwise_mae(&shifted).unwrap().value - 50.0).abs() < 1e-9);
    }

    #[test]
    fn pairwise_mae_three_experts_enumerated() {
        let p = points(&[
            ("a", &[("1", -1.0), ("2", -2.0), ("3", -1.5)]),
            ("b", &[("1", -1.2), ("2", -1.0)]),
            ("c", &[("2", -2.5), ("3", -1.0)]),
        ]);
        // (a,b): lines 1,2 -> (0.2 + 1.0)/2 = 0.6
        // (a,c): lines 2,3 -> (0.5 + 0.5)/2 = 0.5
        // (b,c): line 2    -> 1.5
        let expected = (0.6 + 0.5 + 1.5) / 3.0 * 100.0;
        assert!((pairwise_mae(&p).unwrap().value - expected).abs() < 1e-9);
    }

    #[test]
    fn pair_without_common_lines_is_excluded() {
        let p = points(&[
            ("a", &[("1", -1.0)]),
            ("b", &[("2", -1.0)]),
            ("c", &[("1", -1.5), ("2", -1.0)]),
        ]);
        let r = pairwise_mae(&p).unwrap();
        assert_eq!(r.pairs_used, 2);
        assert_eq!(r.warnings.len(), 1);
        assert!((r.value - 25.0).abs() < 1e-9);
        let lonely = points(&[("a", &[("1", -1.0)]), ("b", &[("2", -1.0)])]);
        assert_eq!(pairwise_mae(&lonely), Err(AgreementError::NoUsablePair));
        assert_eq!(pairwise_mae(&points(&[("a", &[])])), Err(AgreementError::TooFewExperts(1)));
    }

    #[test]
    fn correlation_means() {
        let same = points(&[
            ("a", &[("1", -1.0), ("2", -2.0), ("3", -1.2)]),
            ("b", &[("1", -1.0), ("2", -2.0), ("3", -1.2)]),
            ("c", &[("1", -1.0), ("2", -2.0), ("3", -1.2)]),
        ]);
        assert!((mean_pairwise_corr(&same, CorrelationMethod::Pearson).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(mean_pairwise_corr(&same, CorrelationMethod::Spearman).unwrap().value, 1.0);
        let rev = points(&[
            ("a", &[("1", -1.0), ("2", -2.0), ("3", -1.2)]),
            ("b", &[("1", -2.0), ("2", -1.0), ("3", -1.9)]),
        ]);
        assert_eq!(mean_pairwise_corr(&rev, CorrelationMethod::Spearman).unwrap().value, -1.0);
    }

    #[test]
    fn identical_pair_report() {
        let t = truths(&[("A", -150), ("B", -120)]);
        let mut rs = Vec::new();
        for e in ["e1", "e2"] {
            rs.push(resp(e, "A", "1", Some((-175, -150))));
            rs.push(resp(e, "A", "2", Some((-200, -140))));
            rs.push(resp(e, "B", "1", Some((-125, -100))));
        }
        let set = ResponseSet::new(rs).unwrap();
        let r = agreement_report(&set, &t, &AgreementConfig::default()).unwrap();
        assert_eq!(r.mean_pairwise_mae, Some(0.0));
        assert_eq!(r.mean_pairwise_spearman, Some(1.0));
        assert!((r.mean_pairwise_pearson.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.fleiss_kappa, Some(1.0));
        assert_eq!((r.grid.origin, r.grid.end()), (-200, -100));
        assert_eq!(r.n_items, 3 * 4);
    }

    #[test]
    fn report_needs_two_experts() {
        let t = truths(&[("A", -150)]);
        let set = ResponseSet::new([resp("e1", "A", "1", Some((-175, -150)))]).unwrap();
        assert_eq!(
            agreement_report(&set, &t, &AgreementConfig::default()),
            Err(AgreementError::TooFewExperts(1))
        );
    }

    #[test]
    fn abstaining_rater_contributes_zero_row() {
        let set = ResponseSet::new([
            resp("e1", "A", "1", Some((-150, -125))),
            resp("e2", "A", "1", None),
        ])
        .unwrap();
        let grid = TimeGrid::new(-150, 25, 2).unwrap();
        let labels = kappa_labels(&set, &grid).unwrap();
        assert_eq!(labels, vec![vec![true, false], vec![false, false]]);
    }
}
