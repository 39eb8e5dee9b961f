//! End-to-end checks of the binary: exit-code contract, report schemas,
//! and the varsigma plug-in flow.

use std::path::PathBuf;
use std::process::{Command, Output};

fn icf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icf"))
        .args(args)
        .output()
        .expect("spawn icf")
}

fn repo_file(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
        .display()
        .to_string()
}

#[test]
fn relations_requires_varsigma() {
    let out = icf(&["relations", "--max-weight", "2"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("varsigma"), "stderr was: {err}");
}

#[test]
fn relations_emits_records_and_rank_summary() {
    let out = icf(&["relations", "--max-weight", "2", "--varsigma", "identity"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // 2 + 9 relation records and one rank summary per weight.
    let relations: Vec<&serde_json::Value> = lines
        .iter()
        .filter(|v| v.get("source_word").is_some())
        .collect();
    assert_eq!(relations.len(), 11);
    for r in &relations {
        assert!(r["numeric_residual"].as_f64().unwrap() < 1e-8);
        assert!(r["relation"]["alphabet"].as_str().unwrap() == "012");
    }
    let summaries: Vec<&serde_json::Value> = lines
        .iter()
        .filter(|v| v.get("rank_summary").is_some())
        .collect();
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[1]["rank_summary"]["rank"], 2);
    assert_eq!(summaries[1]["rank_summary"]["ok"], true);
}

#[test]
fn varsigma_file_plugin_works() {
    let out = icf(&[
        "verify",
        "--suite",
        "main",
        "--max-weight",
        "2",
        "--varsigma",
        &repo_file("varsigma/identity.json"),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn wrong_varsigma_candidate_fails_the_gate() {
    let out = icf(&[
        "verify",
        "--suite",
        "main",
        "--max-weight",
        "3",
        "--varsigma",
        &repo_file("varsigma/varrho.json"),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "the annihilation gate must reject varrho"
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn eval_prints_value_and_flags() {
    let out = icf(&["eval", "0", "--precision-bits", "80"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(v["regularized"], true);
    assert!(v["value"].as_str().unwrap().starts_with("0.0000"));

    let out = icf(&["eval", "-1", "--precision-bits", "80"]);
    let v: serde_json::Value = serde_json::from_str(
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(v["regularized"], false);
    assert!(v["value"].as_str().unwrap().starts_with("0.69314718"));

    let out = icf(&["eval", "1,0"]);
    let v: serde_json::Value = serde_json::from_str(
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert!(v["value"]
        .as_str()
        .unwrap()
        .starts_with("-1.644934066848226"));
}

#[test]
fn eval_rejects_bad_words() {
    let out = icf(&["eval", "z,0"]);
    assert!(!out.status.success());
    let out = icf(&["eval", "banana"]);
    assert!(!out.status.success());
}

#[test]
fn grtm_requires_sigma_configuration() {
    let out = icf(&["verify", "--suite", "grtm", "--max-weight", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma-e0"));
}

#[test]
fn tauz_suite_gates_exit_zero() {
    let out = icf(&["verify", "--suite", "tauz", "--max-weight", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    for key in [
        "check",
        "params",
        "max_residual",
        "pass",
        "conditional",
        "seconds",
    ] {
        assert!(report.get(key).is_some(), "missing report key {key}");
    }
}

#[test]
fn reports_are_deterministic_across_runs() {
    let args = [
        "verify",
        "--suite",
        "pent-any-h",
        "--max-weight",
        "2",
        "--seed",
        "11",
    ];
    let a = icf(&args);
    let b = icf(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.status.success());
}
