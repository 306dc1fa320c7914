use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn cubobs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubobs")).args(args).output().expect("run cubobs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Writes the built-in example configurations into a fresh directory.
fn example_dir() -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let out = cubobs(&["example", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let nominal = dir.path().join("nominal.json");
    let uncertain = dir.path().join("uncertain.json");
    (dir, nominal, uncertain)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn write_json(p: &Path, v: &Value) {
    fs::write(p, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn design_with_fixed_gain_reproduces_example_matrices() {
    let (dir, nominal, _) = example_dir();
    let out_path = dir.path().join("designed.json");
    let out = cubobs(&["design", "--config", s(&nominal), "--L", "[10; -3]", "--out", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let cfg = read_json(&out_path);
    let obs = &cfg["observer"];
    assert_eq!(matrix(&obs["E"]), vec![vec![1.0], vec![-1.0]]);
    assert_eq!(matrix(&obs["G"]), vec![vec![-10.0, 0.0], vec![1.0, -11.0]]);
    assert_eq!(matrix(&obs["J"]), vec![vec![0.0], vec![9.0]]);
}

#[test]
fn design_output_round_trips_with_identical_residuals() {
    let (dir, nominal, _) = example_dir();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    assert_eq!(code(&cubobs(&["design", "--config", s(&nominal), "--L", "[10;-3]", "--out", s(&first)])), 0);
    assert_eq!(code(&cubobs(&["design", "--config", s(&first), "--L", "[10;-3]", "--out", s(&second)])), 0);
    let a = read_json(&first);
    let b = read_json(&second);
    assert_eq!(a["observer"]["residuals"], b["observer"]["residuals"]);
    assert_eq!(a, b);
}

#[test]
fn design_auto_margin_stabilizes() {
    let (dir, nominal, _) = example_dir();
    let out_path = dir.path().join("auto.json");
    let out = cubobs(&["design", "--config", s(&nominal), "--auto-margin", "2", "--out", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("spectral_abscissa")).unwrap();
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!(value <= -2.0, "{line}");
}

#[test]
fn design_reports_infeasible_decoupling() {
    let (dir, nominal, _) = example_dir();
    let mut cfg = read_json(&nominal);
    cfg["D"] = json!([[0.0], [1.0]]);
    write_json(&nominal, &cfg);
    let out = cubobs(&["design", "--config", s(&nominal), "--L", "[10;-3]", "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("rank(CD) ≠ rank(D)"));
}

#[test]
fn malformed_expression_is_a_config_error() {
    let (dir, nominal, _) = example_dir();
    let mut cfg = read_json(&nominal);
    cfg["f_L"] = json!(["x1*", "sin(x2)"]);
    write_json(&nominal, &cfg);
    let out = cubobs(&["design", "--config", s(&nominal), "--L", "[10;-3]", "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("f_L[0]"));
}

#[test]
fn check_only_passes_and_leaves_config_untouched() {
    let (_dir, nominal, _) = example_dir();
    let before = fs::read(&nominal).unwrap();
    let out = cubobs(&["certify", "--config", s(&nominal), "--check-only"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("n_condition = semidefinite-pass"), "{text}");
    assert!(text.contains("equilibrium = unique"), "{text}");
    assert_eq!(fs::read(&nominal).unwrap(), before);
}

#[test]
fn check_only_rejects_indefinite_certificate() {
    let (_dir, nominal, _) = example_dir();
    let mut cfg = read_json(&nominal);
    cfg["certificate"]["P"] = json!([[1.0, 0.0], [0.0, -1.0]]);
    write_json(&nominal, &cfg);
    let out = cubobs(&["certify", "--config", s(&nominal), "--check-only"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn search_p_writes_a_certificate_that_rechecks() {
    let (dir, nominal, _) = example_dir();
    let out_path = dir.path().join("cert.json");
    let out = cubobs(&["certify", "--config", s(&nominal), "--search-P", "--out", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let again = cubobs(&["certify", "--config", s(&out_path), "--check-only"]);
    assert_eq!(code(&again), 0, "{}", stdout(&again));
}

#[test]
fn search_p_fails_numerically_for_unstable_g() {
    let (_dir, nominal, _) = example_dir();
    let mut cfg = read_json(&nominal);
    cfg["observer"]["G"] = json!([[1.0, 0.0], [0.0, 1.0]]);
    write_json(&nominal, &cfg);
    let out = cubobs(&["certify", "--config", s(&nominal), "--search-P"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn simulate_writes_csv() {
    let (dir, nominal, uncertain) = example_dir();
    let csv = dir.path().join("run.csv");
    let out = cubobs(&[
        "simulate", "--config", s(&nominal), "--truth", s(&uncertain), "--t-end", "2", "--out", s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,xhat1,xhat2,y1,Jo");
    assert_eq!(lines.count(), 201);
    assert!(!text.contains('\r'));
}

#[test]
fn simulate_rejects_step_not_dividing_delay() {
    let (dir, nominal, _) = example_dir();
    let out = cubobs(&["simulate", "--config", s(&nominal), "--step", "0.3", "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_divergence_is_a_numerical_failure() {
    let (dir, nominal, _) = example_dir();
    let out = cubobs(&[
        "simulate", "--config", s(&nominal), "--input", "sin(t)", "--out", s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn reproduce_command_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let out = cubobs(&["reproduce-paper", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["nominal_cubic.csv", "nominal_linear.csv", "uncertain_cubic.csv", "uncertain_linear.csv", "summary.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    let ratio: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("ratio_uncertain="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(ratio < 1.0);
}

#[test]
fn reproduce_command_into_unwritable_location_fails() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"").unwrap();
    let out = cubobs(&["reproduce-paper", "--out", s(&blocker.join("sub"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_arguments_exit_with_config_error() {
    assert_eq!(code(&cubobs(&["certify", "--config", "x.json"])), 2);
    assert_eq!(code(&cubobs(&["design", "--config", "/nonexistent.json", "--L", "[1;1]", "--out", "o.json"])), 2);
}
