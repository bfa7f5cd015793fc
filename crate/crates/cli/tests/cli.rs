use std::process::{Command, Output};

use serde_json::Value;

fn ellembed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellembed")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = ellembed(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut args = args.to_vec();
    args.push("--json");
    serde_json::from_slice(&ellembed(&args).stdout).expect("valid JSON")
}

fn column(text: &str) -> Vec<&str> {
    text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect()
}

fn untagged_numbers(v: &Value) -> usize {
    match v {
        Value::Number(_) => 1,
        Value::Array(a) => a.iter().map(untagged_numbers).sum(),
        Value::Object(m) if m.contains_key("provenance") => 0,
        Value::Object(m) => m.values().map(untagged_numbers).sum(),
        _ => 0,
    }
}

#[test]
fn sequences() {
    assert_eq!(column(&stdout(&["seq", "b", "--count", "3"])), ["5", "13/2", "34/5"]);
    assert_eq!(column(&stdout(&["seq", "fib-odd", "--count", "5"])), ["1", "2", "5", "13", "34"]);
    assert_eq!(column(&stdout(&["seq", "beta", "--count", "2"])), ["3", "5"]);
    assert_eq!(column(&stdout(&["seq", "pell", "--count", "4"])), ["0", "1", "2", "5"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ellembed(&["seq", "gamma"]).status.code(), Some(2));
    assert_eq!(ellembed(&["seq", "b", "--count", "0"]).status.code(), Some(2));
    assert_eq!(ellembed(&["bounds", "--target", "ball", "--a2", "x"]).status.code(), Some(2));
    assert_eq!(ellembed(&["fold", "trace", "--point", "1,2,3"]).status.code(), Some(2));
}

#[test]
fn failure_payload_is_json() {
    let v = json(&["fold", "verify", "--S", "0"]);
    assert_eq!(v["pass"], Value::Bool(false));
    assert!(v["error"].as_str().unwrap().contains("S"));
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn bounds_lines() {
    assert!(stdout(&["bounds", "--target", "ball", "--a2", "5"]).starts_with("lower 5/2 upper 5/2 OPTIMAL d=2"));
    assert!(stdout(&["bounds", "--target", "cube", "--a2", "3"]).starts_with("lower 3/2 upper 3/2 OPTIMAL d=1"));
    let v = json(&["bounds", "--target", "ball", "--a2", "6"]);
    let r = &v["results"];
    assert_eq!(r["gap"]["value"], "1/14");
    assert_eq!(r["gap"]["provenance"], "PAPER_FORMULA");
    assert_eq!(r["upper"]["value"], "18/7");
    assert_eq!(r["optimal"], Value::Bool(false));
    assert_eq!(untagged_numbers(&v["results"]), 0);
}

#[test]
fn solver_lines() {
    assert!(stdout(&["solve", "cb", "--a", "5", "--tol", "1e-9"]).contains("5/2 (exact re-check passed)"));
    assert!(stdout(&["solve", "cb", "--a", "9", "--tol", "1e-6"]).starts_with("3.000000"));
    assert!(stdout(&["solve", "cp", "--a", "3", "--tol", "1e-9"]).contains("= 3/2"));
    let v = json(&["solve", "cb", "--a", "5"]);
    assert_eq!(v["results"]["solution"]["exact"]["provenance"], "ORACLE");
    assert_eq!(v["results"]["solution"]["value"]["precision"], 12);
    assert_eq!(untagged_numbers(&v["results"]), 0);
}

#[test]
fn regimes() {
    assert!(stdout(&["compare", "--target", "ball", "--a2", "8"]).starts_with("FOLD_BETTER 8/3 vs 17/6"));
    assert!(stdout(&["compare", "--target", "ball", "--a2", "5"]).starts_with("EQUAL_AT_STAIRCASE"));
    assert!(stdout(&["compare", "--target", "ball", "--a2", "4"]).starts_with("PRODUCT_BETTER 2 vs 12/5"));
}

#[test]
fn staircase_csv() {
    let dir = tempdir();
    let path = dir.join("stairs.csv");
    stdout(&["compare", "--target", "ball", "--a2", "5", "--staircase-csv", path.to_str().unwrap(), "--staircase-count", "3"]);
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(r.headers().unwrap().len(), 5);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[1][1], "13/2");
    assert_eq!(&rows[1][2], &rows[1][4]);
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ellembed-cli-{}-{:?}", std::process::id(), std::thread::current().id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn fold_verify_passes() {
    let text = stdout(&["fold", "verify", "--S", "2", "--T", "1", "--eps", "0.1", "--samples", "400", "--seed", "42"]);
    assert!(text.contains("100.00% final"), "{text}");
    assert!(text.contains("0 collisions"), "{text}");
    assert_eq!(text.matches("PASS").count(), 5, "{text}");
    let edge = stdout(&["fold", "verify", "--S", "1", "--samples", "300"]);
    assert!(!edge.contains("FAIL"), "{edge}");
}

#[test]
fn fold_json_is_deterministic() {
    let args = ["fold", "verify", "--S", "1", "--samples", "200", "--seed", "7", "--json"];
    let (a, b) = (ellembed(&args), ellembed(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(untagged_numbers(&v["results"]), 0);
    assert_eq!(v["results"]["config"]["lambda"]["value"], "1/2");
}

#[test]
fn tolerance_failure_exits_one() {
    let out = ellembed(&["fold", "verify", "--S", "1", "--samples", "200", "--planar-tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempdir();
    let path = dir.join("fold.cfg");
    std::fs::write(&path, "S = 1\nseed = 3\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = stdout(&["fold", "verify", "--config", cfg, "--samples", "100"]);
    assert!(from_file.starts_with("S = 1 T = 1") && from_file.contains("seed = 3"), "{from_file}");
    let overridden = stdout(&["fold", "verify", "--config", cfg, "--S", "2", "--samples", "100"]);
    assert!(overridden.starts_with("S = 2 T = 1") && overridden.contains("seed = 3"), "{overridden}");
    let a = json(&["fold", "verify", "--config", cfg, "--samples", "100"]);
    let b = json(&["fold", "verify", "--S", "1", "--seed", "3", "--samples", "100"]);
    assert_eq!(a["config_hash"], b["config_hash"]);
}

#[test]
fn sample_cloud_csv() {
    let dir = tempdir();
    let path = dir.join("cloud.csv");
    stdout(&["fold", "verify", "--S", "1", "--samples", "50", "--out", path.to_str().unwrap()]);
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(r.headers().unwrap().len(), 17);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|row| &row[13] == "true"));
}

#[test]
fn trace_center_point() {
    let text = stdout(&["fold", "trace", "--S", "2", "--point", "0,0,0,0,0,0"]);
    assert!(text.contains("TAU"), "{text}");
    assert!(text.contains("seam-adjacent"), "{text}");
    let v = json(&["fold", "trace", "--S", "2", "--point", "0.2,-0.1,0.1,0.2,0.3,0.1"]);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["results"]["trace"]["jacobian_defect"]["value"].as_f64().unwrap() < 1e-4);
    assert_eq!(untagged_numbers(&v["results"]), 0);
}
