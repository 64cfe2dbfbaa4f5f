//! End-to-end checks of the binary: config validation, exit codes, artifact
//! determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_roughdrive"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run_ok(out: &Output) -> bool {
    out.status.code() == Some(0)
}

#[test]
fn params_subcommand_derives_constants() {
    let out = bin().args(["params", "--h", "0.25"]).output().unwrap();
    assert!(run_ok(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["alpha"].as_f64().unwrap(), 2.0);
    assert_eq!(v["k"].as_f64().unwrap(), 0.5);
}

#[test]
fn params_rejects_bad_h() {
    let out = bin().args(["params", "--h", "0.3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 1/4]"));
}

#[test]
fn minimal_config_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"H": 0.25, "seed": 7}"#);
    // constants is cheap and exercises config loading end to end
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--experiments", "constants", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["params"]["alpha"].as_f64().unwrap(), 2.0);
    assert_eq!(manifest["config"]["g_spec"].as_str().unwrap(), "sin");
    assert!(manifest["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn config_h_violating_dalang_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"H": 0.3, "seed": 7}"#);
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Dalang"));
}

#[test]
fn missing_seed_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"H": 0.25}"#);
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn malformed_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{not json");
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_experiment_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"H": 0.25, "seed": 7}"#);
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--experiments", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_error_is_exit_1() {
    // Too few replicas for the fBm estimator: the experiment errors and the
    // run exits 1, with the error recorded in the manifest.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"H": 0.25, "seed": 7, "N": 64, "L": 8.0, "dt": 0.001953125, "T": 1.0,
            "n_replicas": 50, "output_dir": "OUT"}"#
        ,
    );
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--experiments", "fbm-extraction", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(manifest["experiments"][0]["error"].as_str().unwrap().contains("replicas"));
}

#[test]
fn same_seed_gives_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = r#"{"H": 0.25, "seed": 99, "N": 64, "L": 8.0, "dt": 0.00390625, "T": 1.0,
        "n_replicas": 1200, "g_spec": "sin"}"#;
    let cfg = write_config(dir.path(), cfg_text);
    for sub in ["a", "b"] {
        let out = bin()
            .args(["verify", "--config"])
            .arg(&cfg)
            .args(["--experiments", "constants,cov-decomposition,holder-slope", "--out"])
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert!(
            out.status.code() == Some(0) || out.status.code() == Some(1),
            "unexpected exit: {:?}",
            out.status
        );
    }
    for name in [
        "constants.csv",
        "cov-decomposition.csv",
        "holder-slope.csv",
        "holder-slope.plot.dat",
        "constants.report.txt",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
}

#[test]
fn simulate_dumps_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"H": 0.2, "seed": 5, "N": 64, "L": 8.0, "dt": 0.001953125, "T": 1.0,
            "n_replicas": 3}"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# roughdrive-csv v1");
    assert_eq!(lines.next().unwrap(), "replica,t,u0,v0,xi");
    // 3 replicas x 9 record times
    assert_eq!(lines.count(), 27);
}

#[test]
fn kernel_subcommand_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let out = bin()
        .args(["kernel", "--alpha", "2.0", "--resolution", "201", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(run_ok(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# roughdrive-csv v1\n# alpha=2\nx,p1_of_x\n"));
}

#[test]
fn kernel_identities_runs_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"H": 0.25, "seed": 1}"#);
    let t0 = std::time::Instant::now();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--experiments", "kernel-identities", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(
        t0.elapsed().as_secs_f64() < 10.0,
        "kernel identities took {:?}",
        t0.elapsed()
    );
}
