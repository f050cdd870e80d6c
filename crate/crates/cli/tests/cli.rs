use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const DEFAULT: &str = include_str!("../configs/default.json");

fn default_config() -> Value {
    serde_json::from_str(DEFAULT).unwrap()
}

/// Small grid, fixed slope: converges in a few hundred iterations.
fn quick_config() -> Value {
    let mut c = default_config();
    c["solver"]["alpha0"] = json!(5.0);
    c["solver"]["n_grid"] = json!(51);
    c["solver"]["max_iters"] = json!(20000);
    c
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn mechsolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mechsolve"))
        .args(args)
        .output()
        .unwrap()
}

fn run(args: &[&str]) -> (i32, String) {
    let out = mechsolve(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &quick_config());
    let out = dir.path().join("out");
    let (code, err) = run(&["solve", s(&cfg), "--out", s(&out), "--quiet"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.is_empty(), "--quiet printed {err}");

    let schedule = fs::read_to_string(out.join("schedule.csv")).unwrap();
    assert_eq!(schedule.lines().next(), Some("theta,alpha,beta"));
    assert_eq!(schedule.lines().count(), 52);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iter,objective,du_sup"));
    let snaps = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    assert!(snaps.lines().nth(1).unwrap().starts_with("0,4.0,5.0"));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["converged"], json!(true));
    assert_eq!(manifest["verification"]["passed"], json!(true));
    assert_eq!(manifest["config"]["solver"]["n_grid"], json!(51));
    assert!(manifest["version"].is_string());
    assert!(manifest.get("search").is_none());
}

#[test]
fn slope_at_or_above_price_is_rejected_with_the_key() {
    let dir = TempDir::new().unwrap();
    let mut c = quick_config();
    c["solver"]["alpha0"] = json!(10.0);
    let cfg = write_config(dir.path(), "c.json", &c);
    let (code, err) = run(&["solve", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code, 1);
    assert!(err.contains("solver.alpha0"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    let text = DEFAULT.replacen("\"q1\": 0.5", "\"q1\": 0.5, \"q9\": 1", 1);
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, text).unwrap();
    let (code, err) = run(&["solve", s(&cfg)]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown field `q9`"), "{err}");
    assert!(err.contains("c.json:4:"), "{err}");
}

#[test]
fn iteration_budget_exhaustion_exits_2_with_outputs() {
    let dir = TempDir::new().unwrap();
    let mut c = quick_config();
    c["solver"]["max_iters"] = json!(1);
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = dir.path().join("out");
    let (code, err) = run(&["solve", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("NOT converged"), "{err}");
    assert!(out.join("schedule.csv").exists());
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["converged"], json!(false));
    assert_eq!(manifest["iterations"], json!(1));
}

#[test]
fn verify_accepts_a_solved_schedule_and_rejects_a_tampered_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &quick_config());
    let out = dir.path().join("out");
    assert_eq!(run(&["solve", s(&cfg), "--out", s(&out), "--quiet"]).0, 0);

    let schedule = out.join("schedule.csv");
    let checked = dir.path().join("checked");
    let (code, err) = run(&["verify", s(&cfg), s(&schedule), "--out", s(&checked)]);
    assert_eq!(code, 0, "{err}");
    let matrix = fs::read_to_string(checked.join("utility_matrix.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 1 + 51 * 51);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(checked.join("verification.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], json!(true));
    assert_eq!(report["n_grid"], json!(51));

    // drop one interior slope below its neighbours
    let text = fs::read_to_string(&schedule).unwrap();
    let mut rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    rows[30][1] = "1.0".into();
    let tampered = dir.path().join("tampered.csv");
    let body: Vec<String> = rows.iter().map(|r| r.join(",")).collect();
    fs::write(&tampered, body.join("\n") + "\n").unwrap();
    let rejected = dir.path().join("rejected");
    let (code, err) = run(&["verify", s(&cfg), s(&tampered), "--out", s(&rejected)]);
    assert_eq!(code, 3, "{err}");
    let report = fs::read_to_string(rejected.join("verification.json")).unwrap();
    assert!(report.contains("\"alpha_monotone\""), "{report}");
}

#[test]
fn verify_rejects_a_schedule_on_the_wrong_support() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &quick_config());
    let schedule = dir.path().join("s.csv");
    fs::write(&schedule, "theta,alpha,beta\n1,0,0\n2,0,0\n3,0,0\n").unwrap();
    let (code, err) = run(&["verify", s(&cfg), s(&schedule), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("type support"), "{err}");
}

#[test]
fn sweep_needs_search_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &quick_config());
    let (code, err) = run(&["sweep-alpha0", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("\"search\""), "{err}");
}

#[test]
fn zero_width_search_interval_is_a_single_candidate() {
    let dir = TempDir::new().unwrap();
    let mut c = quick_config();
    c["solver"]["alpha0"] = json!("search");
    c["solver"]["search_interval"] = json!([5.0, 5.0]);
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = dir.path().join("out");
    let (code, err) = run(&["sweep-alpha0", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2, "{sweep}");
    assert!(sweep.lines().nth(1).unwrap().starts_with("5.0,"));
}

#[test]
fn searched_profit_is_at_least_the_zero_slope_profit() {
    let dir = TempDir::new().unwrap();
    let mut c = quick_config();
    c["solver"]["n_grid"] = json!(21);
    c["solver"]["max_iters"] = json!(400);
    c["solver"]["alpha0"] = json!(0.0);
    let fixed = write_config(dir.path(), "fixed.json", &c);
    c["solver"]["alpha0"] = json!("search");
    let searched = write_config(dir.path(), "search.json", &c);

    let profit = |cfg: &Path, out: &str| {
        let out = dir.path().join(out);
        let code = run(&["solve", s(cfg), "--out", s(&out), "--quiet"]).0;
        assert!(code == 0 || code == 2);
        let m: Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m["profit"]["direct"].as_f64().unwrap()
    };
    let at_zero = profit(&fixed, "a");
    let best = profit(&searched, "b");
    assert!(best >= at_zero - 1e-12, "search {best} < fixed {at_zero}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &quick_config());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["solve", s(&cfg), "--out", s(&a), "--quiet"]).0, 0);
    assert_eq!(
        run(&["solve", s(&cfg), "--out", s(&b), "--quiet", "--seedless"]).0,
        0
    );
    for name in ["schedule.csv", "trace.csv", "snapshots.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn bad_usage_exits_1() {
    assert_eq!(run(&["solve"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn missing_config_file_exits_1() {
    let (code, err) = run(&["solve", "/nonexistent/cfg.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/cfg.json"), "{err}");
}
