use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bolza-lab"));
    c.args(args).arg("--out").arg(dir).env_remove("LAB_THREADS");
    if let Some(t) = threads {
        c.env("LAB_THREADS", t);
    }
    c.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn census_contains_the_systole() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"census_L": 3.06}"#);
    let out = lab(&["census", "--config", &cfg], tmp.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("census/census.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "word,trace,length,primitive,closure_residual");
    let lengths: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(!lengths.is_empty());
    assert!(lengths.iter().all(|l| (l - 3.0571418).abs() < 1e-6));
    let manifest = json(&tmp.path().join("census/manifest.json"));
    assert_eq!(manifest["config"]["census_L"].as_f64(), Some(3.06));
    assert_eq!(manifest["pass"], Value::Bool(true));
    assert!(manifest["wall_time_s"].as_f64().is_some());
}

#[test]
fn decreasing_ladder_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"lambda_ladder": [0.1, 0.2]}"#);
    let out = lab(&["mixing", "--config", &cfg], tmp.path(), None);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ConfigError");
}

#[test]
fn unknown_config_fields_and_bad_flags_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n_sample": 10}"#);
    assert_eq!(lab(&["census", "--config", &cfg], tmp.path(), None).status.code(), Some(3));
    assert_eq!(lab(&["census", "--seed", "x"], tmp.path(), None).status.code(), Some(3));
    assert_eq!(lab(&["census", "--threads", "0"], tmp.path(), None).status.code(), Some(3));
}

#[test]
fn starved_budget_is_a_budget_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n_samples": 16}"#);
    let out = lab(&["symbol", "--config", &cfg], tmp.path(), None);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let err = json(&tmp.path().join("symbol/error.json"));
    assert_eq!(err["error"]["kind"], "VarianceBudget");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let body = r#"{"n_samples": 2000, "seed": 7}"#;
    let ca = write_config(a.path(), body);
    let cb = write_config(b.path(), body);
    assert_eq!(lab(&["mixing", "--config", &ca], a.path(), Some("1")).status.code(), Some(0));
    assert_eq!(lab(&["mixing", "--config", &cb, "--threads", "3"], b.path(), None).status.code(), Some(0));
    for f in ["report.json", "mixing_ladder.csv"] {
        let x = std::fs::read(a.path().join("mixing").join(f)).unwrap();
        let y = std::fs::read(b.path().join("mixing").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let ma = json(&a.path().join("mixing/manifest.json"));
    let mb = json(&b.path().join("mixing/manifest.json"));
    assert_eq!(ma["threads"], 1);
    assert_eq!(mb["threads"], 3);
}

#[test]
fn seed_override_changes_the_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n_samples": 2000}"#);
    lab(&["mixing", "--config", &cfg, "--seed", "1"], &tmp.path().join("a"), None);
    lab(&["mixing", "--config", &cfg, "--seed", "2"], &tmp.path().join("b"), None);
    let x = std::fs::read(tmp.path().join("a/mixing/mixing_ladder.csv")).unwrap();
    let y = std::fs::read(tmp.path().join("b/mixing/mixing_ladder.csv")).unwrap();
    assert_ne!(x, y);
    assert_eq!(json(&tmp.path().join("b/mixing/manifest.json"))["seed"], 2);
}

#[test]
fn pi_check_reports_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n_samples": 10000}"#);
    let out = lab(&["pi-check", "--config", &cfg], tmp.path(), None);
    let report = json(&tmp.path().join("pi-check/report.json"));
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    for c in checks {
        assert_eq!(c["pass"], Value::Bool(true), "{c}");
    }
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("pi-check/pi_pairs.csv")).unwrap();
    assert!(csv.lines().count() > 60);
}

#[test]
fn numbers_use_seventeen_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"census_L": 3.06}"#);
    lab(&["census", "--config", &cfg], tmp.path(), None);
    let csv = std::fs::read_to_string(tmp.path().join("census/census.csv")).unwrap();
    let length = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().to_string();
    let mantissa = length.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{length}");
    let report = std::fs::read_to_string(tmp.path().join("census/report.json")).unwrap();
    assert!(report.contains("3.05714183896"), "{report}");
}

#[test]
fn help_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lab(&["--help"], tmp.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for s in ["census", "xray", "injectivity", "mixing", "pi-check", "symbol", "pushforward", "livsic"] {
        assert!(text.contains(s), "{s}");
    }
}
