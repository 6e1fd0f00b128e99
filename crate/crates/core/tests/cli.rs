//! End-to-end runs of the `qdiffract` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qdiffract(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdiffract")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("one error line");
    serde_json::from_str(line).expect("error line is JSON")
}

fn sidecar(path: &Path) -> Value {
    let meta = qdiffract::cli::sidecar_path(path);
    serde_json::from_str(&fs::read_to_string(meta).expect("sidecar exists")).expect("sidecar is JSON")
}

#[test]
fn pattern_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiffract(&["pattern", "--state", "cha", "--order", "2", "--grid", "-3,3,61", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("pattern_catalog.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 62);
    let meta = sidecar(&csv);
    assert_eq!(meta["command"], "pattern");
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["config"]["state"], "cha");
    assert!(meta["rng"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn both_routes_agree_and_plot_script_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiffract(&["pattern", "--state", "coh3", "--order", "2", "--route", "both", "--plot"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["pattern_catalog.csv", "pattern_engine.csv", "pattern_engine.gp"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
        assert!(qdiffract::cli::sidecar_path(&dir.path().join(f)).exists(), "{f} sidecar missing");
    }
}

#[test]
fn invalid_order_is_a_json_error_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiffract(&["pattern", "--order", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert!(e["error"].is_string() && e["message"].is_string());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qdiffract(&["frobnicate"], dir.path()).status.code(), Some(2));
    let o = qdiffract(&["verify", "--only", "no-such-check"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "invalid_input");
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = qdiffract(&["widths"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "io");
}

#[test]
fn injected_bug_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let clean = qdiffract(&["verify", "--only", "matrix-elements"], dir.path());
    assert_eq!(clean.status.code(), Some(0));
    let broken = qdiffract(&["verify", "--only", "matrix-elements", "--inject-bug", "swap-BC"], dir.path());
    assert_eq!(broken.status.code(), Some(1));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"state": "cha", "order": 2, "grid": [-1, 1, 11]}"#).unwrap();
    let o = qdiffract(&["pattern", "--config", cfg.to_str().unwrap(), "--order", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = sidecar(&dir.path().join("pattern_catalog.csv"));
    assert_eq!(meta["config"]["state"], "cha");
    assert_eq!(meta["config"]["order"], 1);
    assert_eq!(meta["data"]["points"], 11);
}

#[test]
fn simulate_is_byte_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let args = ["simulate", "--state", "cha", "--order", "2", "--events", "20000", "--bins", "20", "--seed", "9"];
    let bytes: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            assert_eq!(qdiffract(&args, d.path()).status.code(), Some(0));
            fs::read(d.path().join("histogram.csv")).unwrap()
        })
        .collect();
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn signed_pattern_cannot_be_simulated() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiffract(
        &["simulate", "--state", "num2", "--order", "1", "--scheme", "general", "--rho2", "0.004"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn states_and_coherence_and_widths_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qdiffract(&["states", "--mean-n", "1,2"], dir.path()).status.code(), Some(0));
    let states = fs::read_to_string(dir.path().join("states.csv")).unwrap();
    assert!(states.lines().count() > 2);
    assert_eq!(qdiffract(&["coherence", "--state", "coh4", "--grid", "-2,2,21"], dir.path()).status.code(), Some(0));
    let g2 = fs::read_to_string(dir.path().join("g2.csv")).unwrap();
    assert!(g2.contains("0.75"));
    assert_eq!(qdiffract(&["widths"], dir.path()).status.code(), Some(0));
    assert!(dir.path().join("widths.csv.meta.json").exists());
}
