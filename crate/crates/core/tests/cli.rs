use std::path::Path;
use std::process::Command;

use serde_json::Value;

const FLAT: &str = r#"{"n": 2, "kind": "generated", "t_max": 60,
  "blocks": [{"unitary": [[[1,0],[0,0]],[[0,0],[1,0]]],
    "profiles": [{"kind": "linear", "params": {"slope": 0, "intercept": 0}},
                 {"kind": "linear", "params": {"slope": 1, "intercept": 0}}]}]}"#;

const CONCAVE: &str = r#"{"n": 1, "kind": "generated", "t_max": 20,
  "blocks": [{"unitary": [[[1,0]]],
    "profiles": [{"kind": "tabulated", "params": {"grid": [0,5,10,15,20], "values": [0,4,6,7,7.5]}}]}]}"#;

fn lelong(args: &[&str], dir: &Path) -> (Option<i32>, Value) {
    let out = dir.join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_lelong"))
        .args(args)
        .arg("--output")
        .arg(&out)
        .current_dir(dir)
        .status()
        .unwrap();
    let report = std::fs::read_to_string(&out).ok().and_then(|t| serde_json::from_str(&t).ok()).unwrap_or(Value::Null);
    let _ = std::fs::remove_file(&out);
    (status.code(), report)
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("flat.json"), FLAT).unwrap();
    std::fs::write(dir.path().join("concave.json"), CONCAVE).unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"n\": 2,").unwrap();

    let (code, r) = lelong(&["validate", "--input", "flat.json"], dir.path());
    assert_eq!(code, Some(0));
    assert_eq!(r["status"], "pass");
    assert!(r["tool_version"].is_string() && r["tolerances"].is_object() && r["exponent_convention"].is_string());

    let (code, r) = lelong(&["validate", "--input", "concave.json"], dir.path());
    assert_eq!(code, Some(2));
    assert_eq!(r["result"]["convexity"]["pass"], false);

    assert_eq!(lelong(&["validate", "--input", "broken.json"], dir.path()).0, Some(1));
    assert_eq!(lelong(&["validate", "--input", "missing.json"], dir.path()).0, Some(1));
}

#[test]
fn analyze_reports_exponents_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("flat.json"), FLAT).unwrap();
    std::fs::write(dir.path().join("dirs.json"), r#"{"vectors": [[[1,0],[1,0]]], "duals": [[[0,0],[1,0]]]}"#).unwrap();
    let (code, r) = lelong(&["analyze", "--input", "flat.json", "--grid-points", "120", "--directions", "dirs.json"], dir.path());
    assert_eq!(code, Some(0));
    let jumps: Vec<f64> = serde_json::from_value(r["result"]["filtration"]["jumps"].clone()).unwrap();
    assert!(jumps[0].abs() < 1e-9 && (jumps[1] - 1.0).abs() < 1e-9);
    assert!((r["result"]["vectors"][0]["exponent"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(r["result"]["theorem"][0]["j_index"], 1);
    let csv = std::fs::read_to_string(dir.path().join("report.lambda.csv")).unwrap();
    assert!(csv.starts_with("t,lambda_1,lambda_2\n"));
    assert_eq!(csv.lines().count(), 121);

    std::fs::write(dir.path().join("bad_dirs.json"), r#"{"vectors": [[[1,0]]]}"#).unwrap();
    assert_eq!(lelong(&["analyze", "--input", "flat.json", "--directions", "bad_dirs.json"], dir.path()).0, Some(1));
}

#[test]
fn flat_limit_and_theorem_commands() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("flat.json"), FLAT).unwrap();
    let (code, r) = lelong(&["flat-limit", "--input", "flat.json", "--t-max", "30"], dir.path());
    assert_eq!(code, Some(0));
    assert_eq!(r["config"]["t_max"], 30.0);
    let (code, r) = lelong(&["verify-thm", "--input", "flat.json", "--seed", "5"], dir.path());
    assert_eq!(code, Some(0));
    assert_eq!(r["result"]["consistent"], r["result"]["total"]);
    assert_eq!(r["seed"], 5);
}

#[test]
fn openness_and_bergman_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = lelong(&["openness", "--c", "1", "--m", "0"], dir.path());
    assert_eq!(code, Some(0));
    assert!((r["result"]["p_max"].as_f64().unwrap() - 2.0).abs() < 1e-2);
    assert!(r["result"]["max_identity_residual"].as_f64().unwrap() < 1e-8);

    std::fs::write(dir.path().join("jet.json"), r#"{"n": 1, "weight": {"kind": "zero"}, "jets": [[1,0],[0.5,-0.25]]}"#).unwrap();
    let (code, r) = lelong(&["bergman", "--input", "jet.json"], dir.path());
    assert_eq!(code, Some(0));
    let jumps: Vec<f64> = serde_json::from_value(r["result"]["jumping_numbers"]["jumps"].clone()).unwrap();
    assert!((jumps[0] - 1.0).abs() < 1e-3 && (jumps[1] - 2.0).abs() < 1e-3);
    let n1 = &r["result"]["n1"];
    assert!((n1["bound"].as_f64().unwrap() / n1["exact"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(r["exponent_convention"].as_str().unwrap().contains("log|z|^2"));

    std::fs::write(dir.path().join("bad_jet.json"), r#"{"n": 1, "weight": {"kind": "log_pole", "params": {"a": -3}}, "jets": [[1,0],[0,0]]}"#).unwrap();
    assert_eq!(lelong(&["bergman", "--input", "bad_jet.json"], dir.path()).0, Some(1));
}
