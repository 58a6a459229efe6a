//! The `robin-bifurcate` binary: exit codes, outputs and the summary schema.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CUBIC: &str = r#""f_expr": "s*(s-1)*(3-s)", "alpha": 1, "beta": 3"#;

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robin-bifurcate"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_summary_valid(summary: &Value) {
    let schema_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/summary-v1.schema.json");
    let schema = read_json(&schema_path);
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(summary)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn area_mode_succeeds_and_summary_matches_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(r#"{{{CUBIC}, "bc": {{"kind": "neumann"}}}}"#),
    );
    let out = dir.path().join("out");
    let o = run(&["area"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["holds"], Value::Bool(true));
    assert!(!out.join("diagram.csv").exists());
    let summary = read_json(&out.join("summary.json"));
    assert_summary_valid(&summary);
    assert_eq!(summary["exit_code"], 0);
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(r#"{{{CUBIC}, "bc": {{"kind": "robin", "gamma": 1}}, "lamda": 3}}"#),
    );
    let out = dir.path().join("out");
    let o = run(&["solve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
    assert!(!out.exists());
}

#[test]
fn inverted_zeros_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"f_expr": "s*(s-1)*(3-s)", "alpha": 3, "beta": 1, "bc": {"kind": "neumann"}}"#,
    );
    let o = run(&["area"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha must be < beta"));
}

#[test]
fn missing_grid_and_mode_mismatch_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(r#"{{{CUBIC}, "bc": {{"kind": "robin", "gamma": 1}}, "mode": "area"}}"#),
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["sweep-lambda"], &cfg, &out).status.code(), Some(2));
    let cfg = write_config(
        &dir,
        &format!(r#"{{{CUBIC}, "bc": {{"kind": "robin", "gamma": 1}}}}"#),
    );
    let o = run(&["sweep-lambda"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda_grid"));
}

#[test]
fn infinity_limit_without_area_condition_is_a_property_violation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"f_expr": "(s-1)*(2-s)", "alpha": 1, "beta": 2, "bc": {"kind": "dirichlet"},
            "lambda": 10, "gamma_grid": [1, 10]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["limits-infty"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = read_json(&out.join("summary.json"));
    assert_summary_valid(&summary);
    assert_eq!(summary["experiments"][0]["status"], "violation");
}

#[test]
fn solve_writes_sorted_csv_and_honors_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(r#"{{{CUBIC}, "bc": {{"kind": "robin", "gamma": 1}}, "lambda": 1}}"#),
    );
    let out = dir.path().join("out");
    let o = run(
        &["solve", "--lambda", "4", "--gamma", "0.5", "--n", "128"],
        &cfg,
        &out,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.join("diagram.csv")).unwrap();
    assert!(csv.ends_with('\n'));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("param,sup_norm,center_value,mu1_sign,source,in_Oab")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| r.len() == 6 && r[0] == "4"));
    let sups: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(sups.windows(2).all(|w| w[0] <= w[1]));
    let summary = read_json(&out.join("summary.json"));
    assert_summary_valid(&summary);
    assert_eq!(summary["config"]["lambda"], 4.0);
    assert_eq!(summary["config"]["bc"]["gamma"], 0.5);
    assert_eq!(summary["config"]["n"], 128);
}

#[test]
fn gamma_sweep_uses_gamma_as_parameter() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(
            r#"{{{CUBIC}, "bc": {{"kind": "robin", "gamma": 1}}, "lambda": 5, "gamma_grid": [0.5, 2], "n": 128}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run(&["sweep-gamma"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.join("diagram.csv")).unwrap();
    let params: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert!(params.contains(&"0.5") && params.contains(&"2"));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["diagram"]["mode"]["kind"], "sweep_gamma");
}

#[test]
fn pohozaev_mode_reports_closure() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(
            r#"{{{CUBIC}, "dim": 2, "bc": {{"kind": "dirichlet"}}, "lambda": 10, "epsilon": 0.5}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run(&["pohozaev"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = read_json(&out.join("report.json"));
    let first = &report["solutions"][0];
    assert!(first["coarse"]["rel_error"].as_f64().unwrap() < 1e-3);
    assert_summary_valid(&read_json(&out.join("summary.json")));
}
