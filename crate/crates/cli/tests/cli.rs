use std::fs;
use std::process::{Command, Output};

fn cip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cip")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

#[test]
fn unstable_config_exits_1_and_names_the_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "nt_time = 3001\n").unwrap();
    let out = cip(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability ratio"));
}

#[test]
fn zero_test_solves() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = cip(&["solve", "--test", "zero", "--noise", "0", "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert_eq!(report["test"], "zero");

    let plots = cip(&["plots", run.to_str().unwrap()]);
    assert_eq!(plots.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&plots.stdout).lines().count(), 3);
}

#[test]
fn plots_on_empty_dir_reports_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = cip(&["plots", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact c_true.csv"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"].iter().map(|r| dir.path().join(r)).collect();
    for run in &runs {
        let out = cip(&["solve", "--test", "zero", "--noise", "0.05", "--seed", "3", "--out", run.to_str().unwrap()]);
        assert!(out.status.code().is_some());
    }
    for name in ["c_true.csv", "c_comp.csv", "convergence.csv"] {
        assert_eq!(fs::read(runs[0].join(name)).unwrap(), fs::read(runs[1].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sweep_prints_one_row_per_pair() {
    let out = cip(&["sweep", "--test", "zero", "--noise", "0", "--n1-values", "5,15", "--nt-values", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("N1=")).count(), 2);
}
