// SPDX-License-Identifier: Apache-2.0

//! End-to-end tests of the `simulate` binary and its exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .env_remove("SOURCE_SCOPE_THREADS")
        .output()
        .expect("spawn simulate")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn reference_run_succeeds_and_writes_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let scen = scenario("paper_fig1.scenario");
    let o = simulate(&["--scenario", path_str(&scen), "--out", path_str(out.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "measurements.csv",
        "events_alg1.csv",
        "events_alg2.csv",
        "certificates_alg1.csv",
        "certificates_alg2.csv",
    ] {
        assert!(out.path().join(f).is_file(), "missing {f}");
    }
    let events = std::fs::read_to_string(out.path().join("events_alg1.csv")).unwrap();
    assert!(events.starts_with("j,t_hat,rho_hat,sensor_id,f_j,case_tag,bound_coeff,bound_rho\n"));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("threshold detector: 3 events"), "{stdout}");
}

#[test]
fn sweep_writes_per_run_and_summary_files() {
    let out = tempfile::tempdir().unwrap();
    let scen = scenario("paper_fig1.scenario");
    let o = simulate(&[
        "--scenario",
        path_str(&scen),
        "--out",
        path_str(out.path()),
        "--algorithm",
        "1",
        "--sweep",
        "N=10,100",
        "--reps",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(out.path().join("sweep_n_alg1.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4);
    assert!(out.path().join("sweep_n_alg1_summary.csv").is_file());
    assert!(!out.path().join("events_alg2.csv").exists());
}

#[test]
fn invalid_scenario_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scenario");
    std::fs::write(&bad, "horizon = \"long\"\n").unwrap();
    let o = simulate(&["--scenario", path_str(&bad), "--out", path_str(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn invariant_violation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("paper_fig1.scenario")).unwrap();
    let path = dir.path().join("close.scenario");
    std::fs::write(&path, text.replace("t = 2.54", "t = 0.5")).unwrap();
    let o = simulate(&["--scenario", path_str(&path), "--out", path_str(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_sweep_exits_with_two() {
    let out = tempfile::tempdir().unwrap();
    let scen = scenario("zero.scenario");
    let o = simulate(&["--scenario", path_str(&scen), "--out", path_str(out.path()), "--sweep", "gamma=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_variable_must_be_positive() {
    let out = tempfile::tempdir().unwrap();
    let scen = scenario("zero.scenario");
    let o = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(["--scenario", path_str(&scen), "--out", path_str(out.path())])
        .env("SOURCE_SCOPE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_independent_of_thread_count() {
    let scen = scenario("paper_fig1_sinusoid.scenario");
    let run = |threads: &str| {
        let out = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_simulate"))
            .args(["--scenario", path_str(&scen), "--out", path_str(out.path()), "--seed", "5"])
            .env("SOURCE_SCOPE_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        ["measurements.csv", "events_alg1.csv", "events_alg2.csv", "certificates_alg2.csv"]
            .map(|f| std::fs::read(out.path().join(f)).unwrap())
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let scen = scenario("zero.scenario");
    let o = simulate(&["--scenario", path_str(&scen), "--out", path_str(&blocker.join("out"))]);
    assert_eq!(o.status.code(), Some(1));
}
