use std::fs;

use cip_core::config::{parse_config, RunConfig, SolverConfig};
use cip_core::forward::{BoundaryRecord, Side};
use cip_core::phantoms::PhantomSpec;
use cip_core::pipeline::{emit_plots, mismatch_table, num, read_field, run_pipeline, write_field};
use cip_core::reconstruction::CoefficientField;
use cip_core::reduction::sample_mode;
use cip_core::basis::TensorBasis;
use cip_core::Error;
use ndarray::Array2;
use proptest::prelude::*;

#[test]
fn empty_config_gives_defaults() {
    let cfg = parse_config("").unwrap();
    let s = &cfg.solver;
    assert_eq!((s.lambda, s.z0, s.kappa0), (10.0, -10.0, 1e-3));
    assert_eq!(s.eps, 10f64.powf(-6.5));
    assert_eq!((s.n1, s.nt, s.nx1, s.nt_time, s.reduce_time_stride), (15, 10, 241, 4001, 10));
    assert_eq!((s.r, s.r1, s.t_final, s.p_value), (1.0, 3.0, 0.5, 2.0));
    assert_eq!(s.phantom, PhantomSpec::Ellipse);
    cfg.validate().unwrap();
}

#[test]
fn config_file_overrides_and_comments() {
    let cfg = parse_config("# run\ntest = two-bars\nnoise = 0   # clean\nN1 = 12\nout = runs/x\ndump_intermediates = true\n").unwrap();
    assert_eq!(cfg.solver.phantom, PhantomSpec::TwoBars);
    assert_eq!(cfg.solver.noise, 0.0);
    assert_eq!(cfg.solver.n1, 12);
    assert_eq!(cfg.out_dir.to_str(), Some("runs/x"));
    assert!(cfg.dump_intermediates);
}

#[test]
fn config_round_trips_through_key_values() {
    let mut s = SolverConfig::default();
    s.set("test", "letter-t").unwrap();
    s.set("lambda", "12.5").unwrap();
    let back = parse_config(&s.to_key_values()).unwrap();
    assert_eq!(back.solver, s);
}

#[test]
fn every_precondition_is_named() {
    let cases: &[(&str, &str)] = &[
        ("nt_time = 3001", "stability ratio"),
        ("z0 = -0.5", "z0"),
        ("eps = 0", "eps"),
        ("kappa0 = -1", "kappa0"),
        ("lambda = 0.5", "lambda"),
        ("n1 = 21", "N1"),
        ("nt = 0", "Nt"),
        ("nz = 3", "nz"),
        ("max_iters = 0", "max_iters"),
        ("M = 0", "M"),
        ("reduce_time_stride = 7", "reduce_time_stride"),
        ("noise = 1.5", "noise"),
        ("R1 = 0.5", "R1"),
    ];
    for (line, word) in cases {
        let err = parse_config(line).and_then(|c| c.validate().map(|_| c)).unwrap_err();
        assert!(err.to_string().contains(word), "{line}: '{err}' does not mention {word}");
    }
    assert!(parse_config("colour = red").is_err());
    assert!(parse_config("lambda = ten").unwrap_err().to_string().contains("lambda"));
    assert!(parse_config("just words").unwrap_err().to_string().contains("line 1"));
}

#[test]
fn field_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let f = CoefficientField {
        x: vec![-1.0, 0.1, 1.0],
        z: vec![-0.5, 0.5],
        values: Array2::from_shape_vec((3, 2), vec![0.1, 1.0 / 3.0, -2e-9, 7.25e20, f64::MIN_POSITIVE, 0.0]).unwrap(),
    };
    let p = dir.path().join("f.csv");
    write_field(&p, &f).unwrap();
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("x,z,value\n"));
    assert!(!text.contains('\r'));
    assert_eq!(read_field(&p).unwrap(), f);
}

#[test]
fn plots_need_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["c_true.csv", "convergence.csv"] {
        fs::write(dir.path().join(name), "x\n").unwrap();
    }
    match emit_plots(dir.path()) {
        Err(Error::MissingArtifact(name)) => assert_eq!(name, "c_comp.csv"),
        other => panic!("expected MissingArtifact, got {other:?}"),
    }
    fs::write(dir.path().join("c_comp.csv"), "x\n").unwrap();
    let files = emit_plots(dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let root = dir.path().to_str().unwrap();
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        assert!(!text.contains(root), "{} embeds the run directory", f.display());
        assert!(!text.contains("'/"), "{} has an absolute path", f.display());
    }
}

#[test]
fn sweep_reports_single_mode_as_exact() {
    let tb = TensorBasis::new(1.0, 0.5, 5, 5).unwrap();
    let xs: Vec<f64> = (0..81).map(|i| -1.0 + i as f64 / 40.0).collect();
    let ts: Vec<f64> = (0..401).map(|l| l as f64 / 800.0).collect();
    let f = sample_mode(&tb, 2, 3, &xs, &ts, false);
    let rec = BoundaryRecord { side: Side::Bottom, x: xs, t: ts, g: f.clone(), f };
    let rows = mismatch_table(&rec, 1.0, 0.5, &[2, 5, 10], &[3, 5, 8]).unwrap();
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert!(r.sup_mismatch <= 1e-6, "({}, {}): {}", r.n1, r.nt, r.sup_mismatch);
    }
}

#[test]
fn zero_test_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(SolverConfig::default(), dir.path());
    cfg.solver.set("test", "zero").unwrap();
    cfg.solver.noise = 0.0;
    cfg.dump_intermediates = true;
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.report.converged);
    assert!(out.report.iterations <= 2);
    assert!(out.c_comp.values.iter().all(|v| v.abs() <= 1e-3));
    for name in ["c_true.csv", "c_comp.csv", "convergence.csv", "report.json", "boundary_top.csv", "boundary_bottom.csv", "cauchy_data.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let mut keys: Vec<_> = report.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    let mut want = vec![
        "test", "noise", "seed", "iterations", "wall_time_seconds", "max_in_inclusion", "relative_max_error", "l2_relative_error", "converged",
    ];
    want.sort();
    assert_eq!(keys, want);
    let header = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(header.starts_with("k,l2_change,rel_linf_change,J_value,h2_norm\n"));
}

proptest! {
    #[test]
    fn numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }
}
