use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/examples")
}

fn fiberwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiberwise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, stem: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{stem}.report.json"))).expect("report written");
    serde_json::from_str(&text).expect("report is JSON")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn obstruction_example_passes_and_writes_trace() {
    let out = tempfile::tempdir().unwrap();
    let cfg = examples().join("obstruction-unit-masses.json");
    let o = fiberwise(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let r = report(out.path(), "obstruction-unit-masses");
    assert_eq!(r["schema"], "1");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["rng"]["generator"], "ChaCha8");
    let trace = fs::read_to_string(out.path().join("obstruction-unit-masses.trace.txt")).unwrap();
    assert!(trace.contains("no pair (g, h) has mu(h o p) < 0.4"));
    assert!(out
        .path()
        .join("obstruction-unit-masses.thresholds.csv")
        .exists());
}

#[test]
fn malformed_json_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "broken.json", "{\"scenario\": \"localize\", ");
    let o = fiberwise(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        r#"{"scenario": "obstruction", "seed": 1, "fixture": {"d1": 1, "d2": 1}, "colour": "red"}"#;
    let cfg = write_config(dir.path(), "extra.json", body);
    assert_eq!(
        fiberwise(&["run", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn unknown_corpus_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"scenario": "cover", "seed": 1, "fixture": {"corpus": "spheres", "count": 2}}"#;
    let cfg = write_config(dir.path(), "spheres.json", body);
    assert_eq!(
        fiberwise(&["run", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // the bisection cannot resolve the threshold this finely
    let body = r#"{"scenario": "obstruction", "seed": 1, "fixture": {"d1": 0.3, "d2": 0.7},
        "parameters": {"threshold_tolerance": 1e-12}}"#;
    let cfg = write_config(dir.path(), "tight.json", body);
    let o = fiberwise(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&dir.path().join("reports"), "tight");
    assert_eq!(r["status"], "fail");
    let failed: Vec<&str> = r["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["failed"].as_u64() > Some(0))
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["pullback-threshold"]);
}

#[test]
fn violated_hypotheses_are_flagged_not_failed() {
    let out = tempfile::tempdir().unwrap();
    let cfg = examples().join("localize-constants-only.json");
    let o = fiberwise(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "localize-constants-only");
    assert_eq!(r["results"]["flagged"], 1);
    assert_eq!(
        r["results"]["detail"]["localization"]["status"],
        "hypotheses-violated"
    );
    assert_eq!(
        r["results"]["detail"]["localization"]["easy_inequality_holds"],
        true
    );
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"scenario": "obstruction", "seed": 5, "fixture": {"corpus": "mass-pairs", "count": 2}}"#;
    let cfg = write_config(dir.path(), "pairs.json", body);
    let o = fiberwise(&["run", cfg.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&dir.path().join("reports"), "pairs");
    assert_eq!(r["seed"], 11);
    assert_eq!(r["rng"]["streams"]["masses"], 6);
}

#[test]
fn empty_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fiberwise(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary = fs::read_to_string(dir.path().join("reports/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn suite_lists_failures_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "a-good.json",
        r#"{"scenario": "obstruction", "seed": 1, "fixture": {"d1": 1, "d2": 2}}"#,
    );
    write_config(
        dir.path(),
        "b-tight.json",
        r#"{"scenario": "obstruction", "seed": 1, "fixture": {"d1": 0.3, "d2": 0.7},
            "parameters": {"threshold_tolerance": 1e-12}}"#,
    );
    let o = fiberwise(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let summary = fs::read_to_string(dir.path().join("reports/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("a-good,obstruction,pass"));
    assert!(lines[2].starts_with("b-tight,obstruction,fail"));

    write_config(dir.path(), "c-broken.json", "not json");
    let o = fiberwise(&["suite", dir.path().to_str().unwrap()]);
    // a failed assertion outranks an error
    assert_eq!(o.status.code(), Some(2));
    fs::remove_file(dir.path().join("b-tight.json")).unwrap();
    let o = fiberwise(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reports/summary.json")).unwrap())
            .unwrap();
    assert!(json.to_string().contains("c-broken"));
}

#[test]
fn examples_all_pass() {
    let out = tempfile::tempdir().unwrap();
    let o = fiberwise(&[
        "suite",
        examples().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}
