use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_magnus-delay");

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MINIMAL: &str = r#"{
  "model": {"scalar": {"history": {"constant": {"value": "1"}}}},
  "delay": {"mode": "point", "delta": "1"},
  "N": 2,
  "T": "1"
}"#;

fn scalar_study(history: &str, extra: &str) -> String {
    format!(
        r#"{{
  "model": {{"scalar": {{"history": {history}}}}},
  "delay": {{"mode": "point", "delta": "1"}},
  "N_list": [16, 32, 64, 128],
  "N_ref": 4096,
  "T": "2"{extra}
}}"#
    )
}

fn epidemic(params: &str, preset: &str) -> String {
    format!(
        r#"{{
  "model": {{"epidemic": {{
    "grid": {{"nx": 6, "ny": 6, "Lx": "4", "Ly": "4"}},
    "params": {params},
    "history": {{"preset": "{preset}"}}
  }}}},
  "delay": {{"mode": "point", "delta": "1"}},
  "N": 8,
  "N_list": [4, 8, 16],
  "N_ref": 128,
  "T": "1"
}}"#
    )
}

#[test]
fn run_minimal_scalar_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", MINIMAL);
    let out = dir.path().join("out");
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let rows: Vec<&str> = traj.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "t,u0");
    let u: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(u[0], 1.0);
    assert!((u[1] - (-0.5f64).exp()).abs() < 1e-14);
    assert!((u[2] - (-1.0f64).exp()).abs() < 1e-14);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["steps"], 2);
    assert!(out.join("drift.csv").exists());
}

#[test]
fn negative_beta_exits_2_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &epidemic(r#"{"beta": "-0.5"}"#, "default"));
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("model.epidemic.params.beta"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn syntax_errors_report_line_and_column() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", "{\n  \"model\": {\"scalar\": {\"history\": {\"constant\": {}}}},\n  \"T\": ,\n}");
    let o = cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = cli(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dry_run_prints_plan_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", MINIMAL);
    let out = dir.path().join("out");
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dry-run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let plan: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(plan["steps"], 2);
    assert_eq!(plan["tau"], 0.5);
    assert_eq!(plan["delay"]["family"], "point");
    assert!(!out.exists());
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &epidemic("{}", "default"));
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let o = cli(&["epidemic", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(out);
    }
    for f in ["trajectory.csv", "drift.csv", "report.json", "fields_initial.csv", "fields_final.csv"] {
        let a = std::fs::read(outputs[0].join(f)).unwrap();
        let b = std::fs::read(outputs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let fields = std::fs::read_to_string(outputs[0].join("fields_final.csv")).unwrap();
    assert!(fields.starts_with("x,y,S,I,R\n"));
    assert_eq!(fields.lines().count(), 37);
}

#[test]
fn guard_abort_exits_1() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL
        .replace("\"value\": \"1\"", "\"value\": \"-1\"")
        .replace("\"T\": \"1\"", "\"T\": \"1\", \"guard\": {\"action\": \"abort\"}");
    let cfg = write(dir.path(), "c.json", &text);
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("invariant violated"));
}

#[test]
fn converge_scalar_preset_passes_check() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &scalar_study(r#"{"compatibilized": {}}"#, ""));
    let out = dir.path().join("out");
    let o = cli(&["converge", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--check", "--threads", "2"]);
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), stderr(&o));
    let table = std::fs::read_to_string(out.join("order_table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("N,tau,error,order"));
    let orders: Vec<f64> = lines.filter_map(|l| l.split(',').nth(3).and_then(|p| p.parse().ok())).collect();
    assert_eq!(orders.len(), 3);
    assert!(orders.iter().all(|p| (1.8..=2.2).contains(p)), "{orders:?}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(summary["incompatible_history"], false);
    assert!(summary["table"]["reference"]["cross_validation"].as_f64().unwrap() < 1e-8);
}

#[test]
fn converge_check_fails_outside_window() {
    let dir = TempDir::new().unwrap();
    let extra = ",\n  \"study\": {\"window\": [\"2.5\", \"3\"]}";
    let cfg = write(dir.path(), "c.json", &scalar_study(r#"{"constant": {}}"#, extra));
    let out = dir.path().join("out");
    let o = cli(&["converge", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--check"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("boundary conditions"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(summary["incompatible_history"], true);
    assert_eq!(summary["orders_within_window"], false);
}

#[test]
fn converge_oracle_reference_handles_odd_n() {
    let dir = TempDir::new().unwrap();
    let text = r#"{
  "model": {"scalar": {"history": {"compatibilized": {}}}},
  "delay": {"mode": "trapezoid-half", "delta": "1"},
  "N_list": [15, 31, 63, 127],
  "T": "2",
  "study": {"reference": "oracle"}
}"#;
    let cfg = write(dir.path(), "c.json", text);
    let o = cli(&["converge", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("N =    127"));
}

#[test]
fn converge_rejects_empty_and_invalid_lists() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "a.json", &scalar_study(r#"{"constant": {}}"#, "").replace("[16, 32, 64, 128]", "[]"));
    assert_eq!(code(&cli(&["converge", "--config", cfg.to_str().unwrap()])), 2);
    let cfg = write(dir.path(), "b.json", &scalar_study(r#"{"constant": {}}"#, "").replace("4096", "512"));
    let o = cli(&["converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("N_ref"));
}

#[test]
fn converge_epidemic_by_self_reference() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &epidemic("{}", "default"));
    let out = dir.path().join("out");
    let o = cli(&["converge", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("order_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn validate_history_cases() {
    let dir = TempDir::new().unwrap();
    let compat = write(dir.path(), "a.json", &MINIMAL.replace("\"constant\"", "\"compatibilized\""));
    let o = cli(&["validate-history", "--config", compat.to_str().unwrap(), "--strict"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r1: f64 = stdout(&o).lines().next().unwrap().split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(r1 <= 1e-12, "{r1:e}");

    let constant = write(dir.path(), "b.json", MINIMAL);
    let o = cli(&["validate-history", "--config", constant.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("fail"));
    assert_eq!(code(&cli(&["validate-history", "--config", constant.to_str().unwrap(), "--strict"])), 1);

    let epi = write(dir.path(), "c.json", &epidemic("{}", "default"));
    let o = cli(&["validate-history", "--config", epi.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("r1 =") && stdout(&o).contains("r2 ="));

    let table = write(
        dir.path(),
        "d.json",
        &MINIMAL.replace(r#"{"constant": {"value": "1"}}"#, r#"{"tabulated": {"values": ["1", "1", "1"]}}"#),
    );
    let o = cli(&["validate-history", "--config", table.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("derivatives"), "{}", stderr(&o));
}

#[test]
fn tabulated_history_runs_in_averaged_mode() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL
        .replace(r#"{"constant": {"value": "1"}}"#, r#"{"tabulated": {"values": ["1", "1", "1"]}}"#)
        .replace("\"T\": \"1\"", "\"T\": \"1\", \"half_mode\": \"averaged\"");
    let cfg = write(dir.path(), "c.json", &text);
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let exact = write(dir.path(), "e.json", &text.replace("averaged", "exact"));
    assert_eq!(code(&cli(&["run", "--config", exact.to_str().unwrap(), "--dry-run"])), 0);
    assert_eq!(code(&cli(&["run", "--config", exact.to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()])), 2);
}

#[test]
fn epidemic_command_needs_epidemic_model() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", MINIMAL);
    assert_eq!(code(&cli(&["epidemic", "--config", cfg.to_str().unwrap(), "--dry-run"])), 2);
}
