//! End-to-end checks of the `spikes` binary: each subcommand is invoked as
//! a child process and its JSON output parsed back. The slow `verify`
//! subcommand is exercised by the core crate's acceptance target instead.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn spikes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spikes-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn profile_reports_the_soliton() {
    let dir = scratch_dir("profile");
    let csv = dir.join("curve.csv");
    let out = spikes(&[
        "profile",
        "--n",
        "1",
        "--p",
        "4",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    let u0 = doc["u0"].as_f64().unwrap();
    let m = doc["m_infty"].as_f64().unwrap();
    assert!((u0 - 2.0f64.sqrt()).abs() < 1e-6, "u0 = {u0}");
    assert!((m - 4.0 / 3.0).abs() < 1e-6, "m = {m}");
    let curve = std::fs::read_to_string(&csv).unwrap();
    assert!(curve.starts_with("r,u\n"));
    assert!(curve.lines().count() > 100);
}

#[test]
fn homology_of_the_torus() {
    let out = spikes(&["homology", "--shape", "torus", "--cells", "8"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["betti"], serde_json::json!([1, 2, 1]));
    assert_eq!(doc["p1"], 4);
    assert_eq!(doc["euler"], 0);
}

#[test]
fn ansatz_projection_diagnostics() {
    let out = spikes(&[
        "ansatz", "--shape", "torus", "--cells", "24", "--eps", "0.1", "--center", "0",
    ]);
    let doc = stdout_json(&out);
    let t = doc["nehari_t"].as_f64().unwrap();
    let gap = doc["energy_gap_to_limit"].as_f64().unwrap();
    assert!((t - 1.0).abs() < 0.1, "nehari_t = {t}");
    assert!(gap < 0.5, "energy gap = {gap}");
}

#[test]
fn mesh_gen_writes_a_loadable_off_file() {
    let dir = scratch_dir("meshgen");
    let path = dir.join("sphere.off");
    let out = spikes(&[
        "mesh-gen",
        "--shape",
        "sphere",
        "--refine",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["euler"], 2);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("OFF"));
    let reload = spikes(&["homology", "--mesh-file", path.to_str().unwrap()]);
    let doc = stdout_json(&reload);
    assert_eq!(doc["betti"], serde_json::json!([1, 0, 1]));
}

#[test]
fn sweep_honors_the_output_env_var() {
    let dir = scratch_dir("sweep");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "mesh.kind = torus\nmesh.refine = 16\neps.list = 0.1\noutput.dir = ignored\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spikes"))
        .args(["sweep", "--config", config.to_str().unwrap()])
        .env("SPIKES_OUTPUT_DIR", dir.join("runs"))
        .output()
        .expect("binary runs");
    let doc = stdout_json(&out);
    let run_dir = PathBuf::from(doc["dir"].as_str().unwrap());
    assert!(run_dir.starts_with(dir.join("runs")), "dir = {run_dir:?}");
    assert!(run_dir.join("manifest.json").exists());
    assert!(run_dir.join("records.csv").exists());
    let verdicts = String::from_utf8_lossy(&out.stderr);
    assert!(
        verdicts.contains("multiplicity prediction"),
        "stderr: {verdicts}"
    );
}

#[test]
fn bad_input_exits_nonzero() {
    let missing = spikes(&["solve", "--config", "/nonexistent.cfg"]);
    assert!(!missing.status.success());
    let bad_shape = spikes(&["homology", "--shape", "klein"]);
    assert!(!bad_shape.status.success());
    let msg = String::from_utf8_lossy(&bad_shape.stderr);
    assert!(msg.contains("klein"), "stderr: {msg}");
}
