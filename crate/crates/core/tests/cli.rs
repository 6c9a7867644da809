//! The `xlod` binary as a user drives it.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use xlod::corpus::synthetic::SyntheticLanguageSpec;

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");

fn xlod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlod"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs the two-language grid from the shipped desk config into `dir`.
fn desk_grid(dir: &Path) -> Output {
    let config = format!("{CONFIGS}/desk_matrix.json");
    xlod(&[
        "--set",
        r#"data.synthetic.languages=[{"index":0},{"index":1}]"#,
        "--set",
        &format!("output_dir={}", dir.display()),
        "--set",
        "training.epochs=10",
        "--jobs",
        "2",
        "matrix",
        "--config",
        &config,
    ])
}

#[test]
fn matrix_then_report_evaluate_and_attribute() {
    let dir = tempfile::tempdir().unwrap();
    let out = desk_grid(dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4, "{csv}");
    assert_eq!(lines[0], "setting,Synthetic A,Synthetic B");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));

    // Rerunning without --force refuses to clobber the records.
    let again = desk_grid(dir.path());
    assert_eq!(again.status.code(), Some(11), "{}", stderr(&again));
    assert!(stderr(&again).starts_with("error[partial]: "));

    let report = xlod(&["report", "--results", dir.path().to_str().unwrap(), "--format", "markdown"]);
    assert!(report.status.success(), "{}", stderr(&report));
    let md = fs::read_to_string(dir.path().join("report/report.md")).unwrap();
    assert!(md.contains("BERT Synthetic A"), "{md}");

    let checkpoint = fs::read_dir(dir.path().join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with("mono-SYNTHETIC_A"))
        .expect("monolingual checkpoint");
    let data = tempfile::tempdir().unwrap();
    common::write_olid(&SyntheticLanguageSpec::new(0).generate(0).unwrap(), data.path());
    let predictions = data.path().join("predictions.tsv");
    let eval = xlod(&[
        "evaluate",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--data",
        data.path().to_str().unwrap(),
        "--language",
        "SYNTHETIC_A",
        "--predictions",
        predictions.to_str().unwrap(),
    ]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    let metrics: serde_json::Value = serde_json::from_str(&stdout(&eval)).unwrap();
    assert!(metrics["macro_f1"].as_f64().unwrap() >= 0.9, "{metrics}");
    let tsv = fs::read_to_string(&predictions).unwrap();
    assert_eq!(tsv.lines().next(), Some("id\tgold\tprobability\tpredicted"));
    assert_eq!(tsv.lines().count(), 65);

    let html = data.path().join("attribution.html");
    let attr = xlod(&[
        "attribute",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--text",
        "aw1 aw2 aw3",
        "--steps",
        "16",
        "--format",
        "html",
        "--out",
        html.to_str().unwrap(),
    ]);
    assert!(attr.status.success(), "{}", stderr(&attr));
    assert!(fs::read_to_string(&html).unwrap().starts_with("<!DOCTYPE html>"));

    let plain = xlod(&[
        "attribute",
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--false-positives",
        "2",
        "--data",
        data.path().to_str().unwrap(),
        "--language",
        "SYNTHETIC_A",
        "--steps",
        "8",
    ]);
    assert!(plain.status.success(), "{}", stderr(&plain));
    assert!(!stdout(&plain).contains('\u{1b}'));
}

#[test]
fn unknown_override_key_exits_with_config_error() {
    let config = format!("{CONFIGS}/desk_matrix.json");
    let out = xlod(&["--set", "training.epoch=3", "matrix", "--config", &config]);
    assert_eq!(out.status.code(), Some(5));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[config]: "), "{err}");
    assert!(err.contains("training.epoch"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let out = xlod(&["matrix"]);
    assert_eq!(out.status.code(), Some(2));
    let out = xlod(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ingest_summarizes_generated_languages() {
    let out = xlod(&["ingest", "--synthetic", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Synthetic A") && text.contains("Synthetic B"), "{text}");
}

#[test]
fn ingest_reads_olid_directories() {
    let data = tempfile::tempdir().unwrap();
    common::write_olid(&SyntheticLanguageSpec::new(1).generate(0).unwrap(), data.path());
    let out = xlod(&["ingest", "--data", data.path().to_str().unwrap(), "--language", "SYNTHETIC_B"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("128"), "{}", stdout(&out));

    let out = xlod(&["ingest", "--data", data.path().to_str().unwrap(), "--language", "DA"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn report_without_records_is_its_own_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = xlod(&["report", "--results", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(10), "{}", stderr(&out));
}
