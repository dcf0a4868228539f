//! `papyrodate` command-line tool.
//!
//! Exit status: 0 on success, 1 when the input is invalid or the domain
//! computation fails, 2 when a file cannot be read or written.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use papyrodate::agreement::{agreement_report, AgreementConfig, ResponseSet, SubstitutionPolicy};
use papyrodate::harness::{self, parse_experiment_config};
use papyrodate::io::{self, to_canonical_json, LoadError};
use papyrodate::metrics::{SigmaKind, SweepGrid, WidthMode};
use papyrodate::model::{load_manifest, validate_manifest, ManifestError, PointRule};
use papyrodate::report::{self, EvalSettings, Table, Truth};

#[derive(Parser)]
#[command(name = "papyrodate", version, about = "Scoring and agreement analysis for manuscript dating")]
struct Cli {
    /// Seed echoed in reports; overrides the seed of an experiment config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset manifest and list every violation.
    Validate { manifest: PathBuf },
    /// Score point predictions against ground truth.
    Eval(EvalArgs),
    /// Evaluate expert interval answers and their agreement.
    Agree(AgreeArgs),
    /// Run the protocols of an experiment config.
    Experiment(ExperimentArgs),
    /// Per-document model vs expert comparison.
    Compare(CompareArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// CSV `doc_id,line_id,pred_century`.
    #[arg(long)]
    pred: PathBuf,
    /// CSV `doc_id,year`, or a manifest `.json`.
    #[arg(long)]
    truth: PathBuf,
    /// Smallest alpha of the sweep, in centuries.
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,
    /// Largest alpha of the sweep, in centuries.
    #[arg(long, default_value_t = 2.0)]
    alpha_max: f64,
    /// Sweep step, in centuries.
    #[arg(long, default_value_t = 0.1)]
    alpha_step: f64,
    /// Read alphas as full window widths instead of half-widths.
    #[arg(long)]
    alpha_is_full_width: bool,
    /// `population` or `sample`.
    #[arg(long, default_value = "population")]
    sigma: String,
    /// Expert responses; adds an agreement block to the report.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ExpertOpts {
    /// `per-item-max-observed`, `dataset-max-possible` or `constant:<centuries>`.
    #[arg(long, default_value = "per-item-max-observed")]
    policy: String,
    /// `midpoint` or `nearest-endpoint`.
    #[arg(long, default_value = "midpoint")]
    point_rule: String,
    /// Discretisation step in years.
    #[arg(long, default_value_t = 25)]
    grid_step: i64,
}

impl ExpertOpts {
    fn config(&self) -> Result<AgreementConfig, Failure> {
        let policy: SubstitutionPolicy = self.policy.parse().map_err(|e| domain(anyhow!("{e}")))?;
        let point_rule: PointRule = self.point_rule.parse().map_err(|e| domain(anyhow!("{e}")))?;
        Ok(AgreementConfig {
            grid_step: self.grid_step,
            grid: None,
            policy,
            point_rule,
        })
    }
}

#[derive(Args)]
struct AgreeArgs {
    /// CSV `expert_id,doc_id,line_id,lo_year,hi_year`.
    #[arg(long)]
    responses: PathBuf,
    /// CSV `doc_id,year`.
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    opts: ExpertOpts,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV `doc_id,line_id,pred_century`.
    #[arg(long)]
    pred: PathBuf,
    /// CSV `expert_id,doc_id,line_id,lo_year,hi_year`.
    #[arg(long)]
    responses: PathBuf,
    /// CSV `doc_id,year`.
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    opts: ExpertOpts,
    /// `population` or `sample`.
    #[arg(long, default_value = "population")]
    sigma: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Domain(anyhow::Error),
    Io(anyhow::Error),
}

fn domain(e: anyhow::Error) -> Failure {
    Failure::Domain(e)
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        if e.is_io() {
            Failure::Io(e.into())
        } else {
            Failure::Domain(e.into())
        }
    }
}

impl From<ManifestError> for Failure {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Io { .. } => Failure::Io(e.into()),
            ManifestError::Parse { .. } => Failure::Domain(e.into()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Term {
    color: bool,
}

impl Term {
    fn new() -> Self {
        let color = std::env::var_os("PAPYRODATE_NO_COLOR").is_none() && std::io::stderr().is_terminal();
        Self { color }
    }

    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn error(&self, e: &anyhow::Error) {
        eprintln!("{} {e:#}", self.paint("31", "error:"));
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Outcome {
    io::write_atomic(path, bytes)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Io)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Outcome {
    let s = to_canonical_json(value).map_err(|e| domain(e.into()))?;
    write_out(path, s.as_bytes())
}

fn write_table(path: &Path, t: &Table) -> Outcome {
    write_out(path, &t.to_bytes())
}

fn load_truth(path: &Path) -> Result<Truth, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(Truth::from_manifest(&load_manifest(path)?))
    } else {
        Ok(Truth::from_years(io::load_truths(path)?))
    }
}

fn load_responses(path: &Path) -> Result<ResponseSet, Failure> {
    ResponseSet::new(io::load_responses(path)?).map_err(|e| domain(e.into()))
}

fn parse_sigma(s: &str) -> Result<SigmaKind, Failure> {
    s.parse().map_err(|e: String| domain(anyhow!(e)))
}

fn validate(manifest: &Path) -> Outcome {
    let m = load_manifest(manifest)?;
    let violations = validate_manifest(&m);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(domain(anyhow!("{} violation(s)", violations.len())))
    }
}

fn eval(a: &EvalArgs, seed: Option<u64>) -> Outcome {
    let preds = io::load_predictions(&a.pred)?;
    let truth = load_truth(&a.truth)?;
    let sweep = SweepGrid::new(a.alpha_min, a.alpha_max, a.alpha_step).map_err(|e| domain(e.into()))?;
    let settings = EvalSettings {
        sweep,
        width_mode: if a.alpha_is_full_width {
            WidthMode::FullWidth
        } else {
            WidthMode::HalfWidth
        },
        sigma: parse_sigma(&a.sigma)?,
    };
    let responses = a.responses.as_deref().map(load_responses).transpose()?;
    let mut r = report::evaluate(&preds, &truth, settings).map_err(|e| domain(e.into()))?;
    r.seed = seed;
    if let Some(rs) = responses {
        let truths = truth.centuries().map_err(|e| domain(e.into()))?;
        r.agreement = Some(
            agreement_report(&rs, &truths, &AgreementConfig::default()).map_err(|e| domain(e.into()))?,
        );
    }
    write_json(&a.out.join("report.json"), &r)?;
    write_table(&a.out.join("etw_curve.csv"), &report::etw_table(&r.etw_curve))?;
    write_table(&a.out.join("doc_stats.csv"), &report::doc_stats_table(&r.doc_stats))?;
    println!("{}", r.summary());
    Ok(())
}

fn agree(a: &AgreeArgs) -> Outcome {
    let responses = load_responses(&a.responses)?;
    let truths = load_truth(&a.truth)?.centuries().map_err(|e| domain(e.into()))?;
    let config = a.opts.config()?;
    let r = agreement_report(&responses, &truths, &config).map_err(|e| domain(e.into()))?;
    write_json(&a.out.join("agreement.json"), &r)?;
    write_table(&a.out.join("experts.csv"), &report::expert_table_csv(&r.experts))?;
    let show = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
    println!(
        "experts {}  items {}  pairwise MAE (years) {}  spearman {}  pearson {}  kappa {}",
        r.experts.len(),
        r.n_items,
        show(r.mean_pairwise_mae),
        show(r.mean_pairwise_spearman),
        show(r.mean_pairwise_pearson),
        show(r.fleiss_kappa),
    );
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs, seed: Option<u64>) -> Outcome {
    let bytes = io::read_file(&a.config)?;
    let mut cfg = parse_experiment_config(&bytes).map_err(|e| domain(e.into()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = a.config.parent().unwrap_or(Path::new(""));
    let out = match (&a.out, &cfg.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => return Err(domain(anyhow!("no output directory: set `output_dir` or pass --out"))),
    };
    let r = harness::run_experiment(&cfg, base).map_err(|e| {
        if e.is_io() {
            Failure::Io(e.into())
        } else {
            Failure::Domain(e.into())
        }
    })?;
    println!("seed {}", r.seed);
    write_json(&out.join("experiment.json"), &r)?;
    write_table(&out.join("splits.csv"), &report::splits_table(&r))?;
    if !r.baseline.is_empty() {
        write_table(&out.join("baseline.csv"), &report::baseline_table(&r))?;
    }
    if let Some(t) = report::transfer_table(&r) {
        write_table(&out.join("transfer.csv"), &t)?;
    }
    if let Some(t) = report::union_table(&r) {
        write_table(&out.join("union.csv"), &t)?;
    }
    if let Some(t) = report::experiment_etw_table(&r) {
        write_table(&out.join("etw_curves.csv"), &t)?;
    }
    for b in &r.baseline {
        for row in &b.rows {
            println!(
                "baseline {} {:>5.1}%  MAE {:.4}  MSE {:.4}",
                b.dataset, row.pct, row.test.mae, row.test.mse
            );
        }
    }
    Ok(())
}

fn compare(a: &CompareArgs) -> Outcome {
    let preds = io::load_predictions(&a.pred)?;
    let responses = load_responses(&a.responses)?;
    let truth = load_truth(&a.truth)?;
    let config = a.opts.config()?;
    let r = report::compare(&preds, &responses, &truth, &config, parse_sigma(&a.sigma)?)
        .map_err(|e| domain(e.into()))?;
    write_json(&a.out.join("compare.json"), &r)?;
    write_table(&a.out.join("compare.csv"), &report::compare_table(&r))?;
    write_table(&a.out.join("boxplot.csv"), &report::boxplot_table(&r))?;
    println!("best expert {}", r.best_expert);
    Ok(())
}

fn main() -> ExitCode {
    // clap's own usage status is 2, which here means an I/O failure
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let term = Term::new();
    let result = match &cli.command {
        Command::Validate { manifest } => validate(manifest),
        Command::Eval(a) => eval(a, cli.seed),
        Command::Agree(a) => agree(a),
        Command::Experiment(a) => experiment(a, cli.seed),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            term.error(&e);
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            term.error(&e);
            ExitCode::from(2)
        }
    }
}
