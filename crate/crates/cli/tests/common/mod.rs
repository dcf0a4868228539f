#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fx(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_papyrodate"))
        .args(args)
        .env("PAPYRODATE_NO_COLOR", "1")
        .output()
        .expect("spawn papyrodate")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// The four golden runs: (name, args without `--out`, files written).
pub fn golden_runs() -> Vec<(&'static str, Vec<String>, &'static [&'static str])> {
    let own = |v: &[&str]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>();
    vec![
        (
            "eval",
            own(&[
                "--seed", "7", "eval",
                "--pred", s(&fx("eval/preds.csv")),
                "--truth", s(&fx("eval/truth.csv")),
                "--alpha-min", "0", "--alpha-max", "1.2", "--alpha-step", "0.2",
            ]),
            &["report.json", "etw_curve.csv", "doc_stats.csv"],
        ),
        (
            "agree",
            own(&[
                "agree",
                "--responses", s(&fx("experts/responses.csv")),
                "--truth", s(&fx("experts/truth.csv")),
                "--grid-step", "25",
            ]),
            &["agreement.json", "experts.csv"],
        ),
        (
            "experiment",
            own(&["experiment", "--config", s(&fx("experiment/config.json"))]),
            &[
                "experiment.json", "splits.csv", "baseline.csv", "transfer.csv", "union.csv",
                "etw_curves.csv",
            ],
        ),
        (
            "compare",
            own(&[
                "compare",
                "--pred", s(&fx("experts/model_preds.csv")),
                "--responses", s(&fx("experts/responses.csv")),
                "--truth", s(&fx("experts/truth.csv")),
            ]),
            &["compare.json", "compare.csv", "boxplot.csv"],
        ),
    ]
}

/// Runs one golden command into `out` and returns the files that differ
/// from the committed goldens. With `PAPYRODATE_BLESS=1` the goldens are
/// rewritten instead.
pub fn check_golden(name: &str, args: &[String], files: &[&str], out: &Path) -> Vec<String> {
    let mut full = args.to_vec();
    full.push("--out".into());
    full.push(s(out).into());
    let refs: Vec<&str> = full.iter().map(String::as_str).collect();
    let o = run(&refs);
    assert_eq!(
        code(&o),
        0,
        "{name} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let golden = fixtures().join("golden").join(name);
    let bless = std::env::var_os("PAPYRODATE_BLESS").is_some();
    let mut diffs = Vec::new();
    for f in files {
        let got = std::fs::read(out.join(f)).unwrap_or_else(|e| panic!("{name}/{f}: {e}"));
        if bless {
            std::fs::create_dir_all(&golden).unwrap();
            std::fs::write(golden.join(f), &got).unwrap();
            continue;
        }
        match std::fs::read(golden.join(f)) {
            Ok(want) if want == got => {}
            _ => diffs.push(format!("{name}/{f}")),
        }
    }
    diffs
}
