//! Subcommands write deterministic artifacts and a manifest.

use mq_cli::commands::{Command, LimitExperiment};
use mq_cli::config::RunConfig;
use mq_cli::run;
use std::fs;
use std::path::Path;
use std::process::Command as Process;

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn geometry_sweep_writes_one_row_per_direction() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&RunConfig::default(), &Command::Geometry { sweep: Some(16) }, dir.path());
    assert!(m.success(), "{m:?}");
    let csv = read(dir.path(), "geometry.csv");
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.starts_with("index,q_x,q_y,a_x,a_y,rate\n"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "geometry");
}

#[test]
fn monte_carlo_is_reproducible_for_a_seed() {
    let cfg = RunConfig {
        mc_samples: 4_000,
        mc_horizon: 2_000,
        seed: 17,
        ..RunConfig::default()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&cfg, &Command::Mc, d1.path()).error.is_none());
    assert!(run(&cfg, &Command::Mc, d2.path()).error.is_none());
    assert_eq!(read(d1.path(), "mc.csv"), read(d2.path(), "mc.csv"));
}

#[test]
fn ratio_limit_run_passes_and_records_the_report() {
    let cfg = RunConfig {
        q: mq_core::Vec2::new(1.0, 1.0),
        kind: mq_core::processes::WalkKind::Free,
        radii: vec![20.0, 30.0, 40.0],
        ..RunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let m = run(&cfg, &Command::Limits { experiment: LimitExperiment::Ratiolimit }, dir.path());
    assert!(m.success(), "{m:?}");
    let csv_path = m.outputs.iter().find(|o| o.ends_with(".csv")).unwrap();
    let csv = read(dir.path(), csv_path);
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn binary_reports_configuration_errors_with_a_failure_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\nwhat = 2\n").unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_mq"))
        .args(["validate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("what"), "{err}");
}

#[test]
fn binary_validates_the_default_measure() {
    let dir = tempfile::tempdir().unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_mq"))
        .args(["validate", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("validate [PASS]"));
    assert!(read(dir.path(), "validate.csv").contains("period,2\n"));
}
