use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn subdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdiff")).args(args).env_remove("SUBDIFF_THREADS").output().unwrap()
}

fn run(command: &str, config: &Path, out: &Path) -> Output {
    subdiff(&[command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small_forward(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("small.json");
    let text = format!(
        r#"{{
  "problem": {{ "rho": 0.6, "n_steps": 64, "n_cells": 32 }},
  "sigma": {{ "kind": "affine", "a": 1.0, "b": 0.5 }},
  "q": {{ "kind": "constant", "value": 0.2 }},
  "source": {{ "kind": "modes", "modes": [{{ "k": 2, "amplitude": {{ "kind": "constant", "value": 1.0 }} }}] }},
  "initial": {{ "kind": "modes", "modes": [{{ "k": 1, "amplitude": 0.5 }}] }}{extra}
}}"#
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn selftest_passes() {
    let out = subdiff(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("suites passed") && !stdout.contains("FAIL"));
}

#[test]
fn manufactured_forward_config_meets_the_residual_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("forward", &examples().join("manufactured_forward.json"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("diagnostics.json"));
    assert!(report["residual_norm"].as_f64().unwrap() <= 1e-2);
    assert_eq!(report["config"]["problem"]["modes"], 64);
    let rows = fs::read_to_string(dir.path().join("solution.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 1025);
}

#[test]
fn noise_free_inverse_config_recovers_q() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("inverse", &examples().join("inverse_constant.json"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    assert!(report["recovery_error"].as_f64().unwrap() <= 1e-3);
    assert!(report["condition_report"]["compatibility"]["passed"].as_bool().unwrap());
    for name in ["q.csv", "psi.csv", "iterates.csv"] {
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn verify_reports_both_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_forward(dir.path(), r#", "verify": { "residual_tol": 10.0, "gap_tol": 1.0 }"#);
    let out = run("verify", &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/verify.json"));
    assert!(report["solver_gap"].as_f64().unwrap() < 1.0);
    let config = small_forward(dir.path(), r#", "verify": { "residual_tol": 1e-300, "gap_tol": 1e-300 }"#);
    assert_eq!(run("verify", &config, &dir.path().join("out")).status.code(), Some(1));
}

#[test]
fn unknown_keys_are_rejected_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_forward(dir.path(), r#", "solver": { "tol": 1e-12, "tolerance": 1 }"#);
    let out = run("forward", &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("small.json:6:"), "{stderr}");
    assert!(stderr.contains("tolerance"));
}

#[test]
fn out_of_range_parameters_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{ "problem": { "rho": 1.5, "n_steps": 8, "n_cells": 8 }, "sigma": { "kind": "constant", "value": 1.0 } }"#)
        .unwrap();
    assert_eq!(run("forward", &path, dir.path()).status.code(), Some(2));
    let config = small_forward(dir.path(), "");
    let text = fs::read_to_string(&config).unwrap().replace(r#""k": 2"#, r#""k": 40"#);
    fs::write(&config, text).unwrap();
    assert_eq!(run("forward", &config, dir.path()).status.code(), Some(2));
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("forward", &dir.path().join("absent.json"), dir.path()).status.code(), Some(5));
    let config = small_forward(dir.path(), r#", "data": { "kind": "csv", "path": "absent.csv" }"#);
    assert_eq!(run("inverse", &config, dir.path()).status.code(), Some(5));
}

#[test]
fn nonpositive_flux_is_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("psi.csv"), "t,psi\n0,0.0\n1,0.0\n").unwrap();
    let config = small_forward(dir.path(), r#", "data": { "kind": "csv", "path": "psi.csv" }"#);
    assert_eq!(run("inverse", &config, &dir.path().join("out")).status.code(), Some(3));
}

#[test]
fn iteration_budget_exhaustion_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_forward(dir.path(), r#", "solver": { "tol": 1e-14, "max_iter": 2 }"#);
    assert_eq!(run("forward", &config, &dir.path().join("out")).status.code(), Some(4));
}

#[test]
fn csv_profiles_and_fields_are_read() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sigma.csv"), "t,sigma\n0,1.0\n0.5,1.25\n1,1.5\n").unwrap();
    let phi: String = (0..=32)
        .map(|i| format!("{}\n", if i == 0 || i == 32 { 0.0 } else { 0.1 * (i as f64 / 32.0) * (1.0 - i as f64 / 32.0) }))
        .collect();
    fs::write(dir.path().join("phi.csv"), format!("phi\n{phi}")).unwrap();
    let config = small_forward(dir.path(), "");
    let text = fs::read_to_string(&config)
        .unwrap()
        .replace(r#""kind": "affine", "a": 1.0, "b": 0.5"#, r#""kind": "csv", "path": "sigma.csv""#)
        .replace(
            r#""initial": { "kind": "modes", "modes": [{ "k": 1, "amplitude": 0.5 }] }"#,
            r#""initial": { "kind": "csv", "path": "phi.csv" }"#,
        );
    fs::write(&config, text).unwrap();
    let out = run("forward", &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_forward(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run("forward", &config, &a).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_subdiff"))
        .args(["forward", "--config", config.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("SUBDIFF_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in ["solution.csv", "modes.csv", "flux.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    // metadata differs only in the output directory
    let strip = |p: &Path| {
        let mut v = json(&p.join("diagnostics.json"));
        v["config"]["output"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
}
