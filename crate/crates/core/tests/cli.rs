use std::path::Path;
use std::process::{Command, Output};

const GOLDEN: &str = include_str!("golden/demo_grid.csv");

fn demo_config() -> String {
    format!("{}/../../configs/demo_grid.toml", env!("CARGO_MANIFEST_DIR"))
}

fn pmrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmrsim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const RYDBERG_TI: &str = r#"
task = "evolve-ti"
[model]
kind = "rydberg"
n = 2
omega = 1.0
c6 = 1.0
[run]
t = 1.0
eps = 1e-8
"#;

#[test]
fn evolve_ti_two_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ti.toml", RYDBERG_TI);
    let out = pmrsim(&["--config", &cfg, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["error"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["passed"], true);
    assert_eq!(v["task"], "evolve-ti");
}

#[test]
fn truncated_diagonal_flag() {
    let dir = tempfile::tempdir().unwrap();
    let body = RYDBERG_TI.replace("n = 2", "n = 5").replace("eps = 1e-8", "eps = 1e-3");
    let cfg = write_config(dir.path(), "ti.toml", &body);
    let out = pmrsim(&["--config", &cfg, "--truncate-diagonal", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["notes"].as_str().unwrap().starts_with("n_C="));
}

#[test]
fn evolve_td_adaptive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "td.toml",
        r#"
task = "evolve-td"
[model]
kind = "tfim"
n_per_axis = 2
dim = 1
j = 1.0
zeta = 0.8
omega = 5.0
[run]
t = 0.5
eps = 1e-5
"#,
    );
    let out = pmrsim(&["--config", &cfg, "--adaptive-segments"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("task,N,t,eps,r,Q,gamma,error,passed,notes,wall_time_s\n"));
    assert!(text.contains("adaptive segments"));
}

#[test]
fn malformed_config_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &RYDBERG_TI.replace("omega = 1.0", "omega = \"fast\""));
    let out = pmrsim(&["--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("omega"), "{err}");

    let cfg = write_config(dir.path(), "unknown.toml", &RYDBERG_TI.replace("c6 = 1.0", "c6 = 1.0\nzeta = 2.0"));
    let out = pmrsim(&["--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("zeta"));

    let cfg = write_config(dir.path(), "neg.toml", &RYDBERG_TI.replace("eps = 1e-8", "eps = -1.0"));
    assert_eq!(pmrsim(&["--config", &cfg]).status.code(), Some(1));
}

#[test]
fn dense_cap_is_a_capacity_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "big.toml", &RYDBERG_TI.replace("n = 2", "n = 20"));
    assert_eq!(pmrsim(&["--config", &cfg]).status.code(), Some(3));
}

#[test]
fn golden_sweep_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = pmrsim(&["--config", &demo_config(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), GOLDEN);

    let json = pmrsim(&["--config", &demo_config(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), GOLDEN.lines().count() - 1);
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.toml", "task = \"estimate\"\n[estimate]\nalgorithms = []\n");
    let out = pmrsim(&["--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "algorithm,N,d,t,eps,omega,delta,c6p,J,zeta,w,gate_cost,qubit_cost,branch,notes\n"
    );
}

#[test]
fn verify_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.toml", &RYDBERG_TI.replace("evolve-ti", "verify"));
    let a = pmrsim(&["--config", &cfg, "--seed", "42"]);
    let b = pmrsim(&["--config", &cfg, "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("true")));
}

#[test]
fn decompose_lists_every_term() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", RYDBERG_TI);
    let out = pmrsim(&["--config", &cfg, "--task", "decompose"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // identity plus five Pauli terms
    assert_eq!(text.lines().filter(|l| l.starts_with("pauli,")).count(), 6);
    assert_eq!(text.lines().filter(|l| l.starts_with("offdiag,")).count(), 2);
}

#[test]
fn unwritable_output_path() {
    let out = pmrsim(&["--config", &demo_config(), "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
