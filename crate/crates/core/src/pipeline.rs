//! End-to-end runs: simulate, reduce, solve, reconstruct, write artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use ndarray::Array2;
use serde::Serialize;

use crate::basis::TensorBasis;
use crate::carleman::{picard_iterate, IterationTrace, PicardStatus};
use crate::config::{RunConfig, SolverConfig};
use crate::error::{Error, Result};
use crate::forward::{add_noise_pair, run_forward, BoundaryRecord, BoundaryRecorder, BoundaryRule};
use crate::galerkin::{uniform_zgrid, GalerkinOperators};
use crate::phantoms::sample_phantom;
use crate::reconstruction::{metrics, reconstruct_c, CoefficientField, ReconstructionReport};
use crate::reduction::{build_cauchy_data, CauchyData, Projector};

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub test: String,
    pub noise: f64,
    pub seed: u64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub max_in_inclusion: Vec<f64>,
    pub relative_max_error: Vec<f64>,
    pub l2_relative_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: RunReport,
    pub metrics: ReconstructionReport,
    pub status: PicardStatus,
    pub trace: IterationTrace,
    pub cauchy: CauchyData,
    pub c_true: CoefficientField,
    pub c_comp: CoefficientField,
}

/// Noisy boundary records `(top, bottom)` on the reduction sample grid.
pub fn simulate_boundary(cfg: &SolverConfig) -> Result<(BoundaryRecord, BoundaryRecord)> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let xs = grid.coords();
    let c_grid = sample_phantom(&cfg.phantom, &xs, &xs);
    let mut rec = BoundaryRecorder::new(&grid, cfg.r, cfg.reduce_time_stride)?;
    run_forward(&c_grid, cfg.p_value, &grid, &BoundaryRule::FrozenInitial, |l, u| {
        rec.observe(l, u);
        Ok(())
    })?;
    let (top, bottom) = rec.finish();
    Ok(add_noise_pair(&top, &bottom, cfg.noise_spec()))
}

/// Runs the full reconstruction without touching the file system.
pub fn solve(cfg: &SolverConfig) -> Result<PipelineOutcome> {
    let start = Instant::now();
    let (top, bottom) = simulate_boundary(cfg)?;
    let basis = TensorBasis::new(cfg.r, cfg.t_final, cfg.n1, cfg.nt)?;
    let projector = Projector::new(&basis, &top.x, &top.t)?;
    let cauchy = build_cauchy_data(&top, &bottom, &projector)?;
    let ops = GalerkinOperators::new(&basis, cfg.p_value)?;
    let zgrid = uniform_zgrid(cfg.r, cfg.nz)?;
    let outcome = picard_iterate(&ops, &cauchy, &cfg.carleman(), &zgrid)?;
    let c_comp = reconstruct_c(&outcome.profile, &basis, cfg.p_value, &top.x);
    let c_true = CoefficientField { x: top.x.clone(), z: zgrid.clone(), values: sample_phantom(&cfg.phantom, &top.x, &zgrid) };
    let wall = start.elapsed().as_secs_f64();
    let m = metrics(&c_comp, &c_true, &cfg.phantom.inclusions(), outcome.trace.iterations(), wall);
    info!(
        "{}: status {:?} after {} iterations, l2 error {:.4}",
        cfg.phantom,
        outcome.status,
        outcome.trace.iterations(),
        m.l2_relative_error
    );
    let report = RunReport {
        test: cfg.phantom.name().to_string(),
        noise: cfg.noise,
        seed: cfg.seed,
        iterations: m.iterations,
        wall_time_seconds: wall,
        max_in_inclusion: m.max_in_inclusion.clone(),
        relative_max_error: m.relative_max_error.clone(),
        l2_relative_error: m.l2_relative_error,
        converged: outcome.status == PicardStatus::Converged,
    };
    Ok(PipelineOutcome { report, metrics: m, status: outcome.status, trace: outcome.trace, cauchy, c_true, c_comp })
}

/// Full run with artifacts written to `cfg.out_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let out = solve(&cfg.solver)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_field(&dir.join("c_true.csv"), &out.c_true)?;
    write_field(&dir.join("c_comp.csv"), &out.c_comp)?;
    write_trace(&dir.join("convergence.csv"), &out.trace)?;
    write_report(&dir.join("report.json"), &out.report)?;
    write_text(&dir.join("run_config.txt"), &cfg.solver.to_key_values())?;
    if cfg.dump_intermediates {
        let (top, bottom) = simulate_boundary(&cfg.solver)?;
        write_boundary(&dir.join("boundary_top.csv"), &top)?;
        write_boundary(&dir.join("boundary_bottom.csv"), &bottom)?;
        write_cauchy(&dir.join("cauchy_data.csv"), &out.cauchy, cfg.solver.nt)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n1: usize,
    pub nt: usize,
    pub sup_mismatch: f64,
}

/// `sup |f - Σ c_n P_n|` of the bottom-side data for every cutoff pair.
pub fn mismatch_table(record: &BoundaryRecord, r: f64, t_final: f64, n1_values: &[usize], nt_values: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n1 in n1_values {
        for &nt in nt_values {
            let basis = TensorBasis::new(r, t_final, n1, nt)?;
            let proj = Projector::new(&basis, &record.x, &record.t)?;
            rows.push(SweepRow { n1, nt, sup_mismatch: proj.mismatch_sup(&record.f) });
        }
    }
    Ok(rows)
}

/// Simulates the configured test and writes `cutoff_sweep.csv`.
pub fn sweep_cutoff(cfg: &RunConfig, n1_values: &[usize], nt_values: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let (_, bottom) = simulate_boundary(&cfg.solver)?;
    let rows = mismatch_table(&bottom, cfg.solver.r, cfg.solver.t_final, n1_values, nt_values)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join("cutoff_sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["N1", "Nt", "sup_mismatch"])?;
    for row in &rows {
        w.write_record([row.n1.to_string(), row.nt.to_string(), num(row.sup_mismatch)])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Shortest round-trip text; exponent form for very large or small magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub fn write_field(path: &Path, field: &CoefficientField) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "z", "value"])?;
    for (i, x) in field.x.iter().enumerate() {
        for (j, z) in field.z.iter().enumerate() {
            w.write_record([num(*x), num(*z), num(field.values[[i, j]])])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<CoefficientField> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |k: usize| rec[k].parse::<f64>().map_err(|_| Error::Config(format!("bad number '{}' in {}", &rec[k], path.display())));
        rows.push((parse(0)?, parse(1)?, parse(2)?));
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut zs: Vec<f64> = Vec::new();
    for &(x, z, _) in &rows {
        if !xs.contains(&x) {
            xs.push(x);
        }
        if !zs.contains(&z) {
            zs.push(z);
        }
    }
    let nz = zs.len();
    let values = Array2::from_shape_fn((xs.len(), nz), |(i, j)| rows[i * nz + j].2);
    Ok(CoefficientField { x: xs, z: zs, values })
}

pub fn write_trace(path: &Path, trace: &IterationTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "l2_change", "rel_linf_change", "J_value", "h2_norm"])?;
    for r in &trace.records {
        w.write_record([r.k.to_string(), num(r.l2_change), num(r.rel_linf_change), num(r.j_value), num(r.h2_norm)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_boundary(path: &Path, rec: &BoundaryRecord) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "t", "f", "g"])?;
    for (i, x) in rec.x.iter().enumerate() {
        for (l, t) in rec.t.iter().enumerate() {
            w.write_record([num(*x), num(*t), num(rec.f[[i, l]]), num(rec.g[[i, l]])])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_cauchy(path: &Path, c: &CauchyData, nt: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["flat", "n1", "nt", "p_plus", "p_minus", "q_plus", "q_minus"])?;
    for k in 0..c.p_plus.len() {
        w.write_record([
            k.to_string(),
            (k / nt + 1).to_string(),
            (k % nt + 1).to_string(),
            num(c.p_plus[k]),
            num(c.p_minus[k]),
            num(c.q_plus[k]),
            num(c.q_minus[k]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

const PLOT_INPUTS: [&str; 3] = ["c_true.csv", "c_comp.csv", "convergence.csv"];

/// Writes gnuplot scripts next to the run artifacts; paths inside are relative.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>> {
    for name in PLOT_INPUTS {
        if !run_dir.join(name).is_file() {
            return Err(Error::MissingArtifact(name.to_string()));
        }
    }
    let heatmap = |csv: &str, png: &str, title: &str| {
        format!(
            "set datafile separator ','\nset terminal pngcairo size 800,700\nset output '{png}'\n\
             set view map\nset size ratio -1\nset xlabel 'x'\nset ylabel 'z'\nset title '{title}'\n\
             splot '{csv}' every ::1 using 1:2:3 with image notitle\n"
        )
    };
    let scripts = [
        ("plot_c_true.gp", heatmap("c_true.csv", "c_true.png", "true coefficient")),
        ("plot_c_comp.gp", heatmap("c_comp.csv", "c_comp.png", "computed coefficient")),
        (
            "plot_convergence.gp",
            "set datafile separator ','\nset terminal pngcairo size 800,500\nset output 'convergence.png'\n\
             set logscale y\nset xlabel 'k'\nset ylabel 'change'\n\
             plot 'convergence.csv' every ::1 using 1:2 with linespoints title 'L2 change', \\\n     \
             'convergence.csv' every ::1 using 1:3 with linespoints title 'relative Linf change'\n"
                .to_string(),
        ),
    ];
    let mut written = Vec::new();
    for (name, body) in scripts {
        let path = run_dir.join(name);
        write_text(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}
