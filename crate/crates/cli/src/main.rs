use std::path::PathBuf;
use std::process::ExitCode;

use cip_core::carleman::PicardStatus;
use cip_core::config::{load_config, RunConfig, SolverConfig};
use cip_core::pipeline::{emit_plots, run_pipeline, sweep_cutoff};
use cip_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cip", about = "Coefficient reconstruction for u_t = Δu + c u from lateral Cauchy data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate data for a test, reconstruct c and write the run artifacts.
    Solve(Common),
    /// Tabulate the sup mismatch of the truncated expansion over cutoff pairs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// N1 values of the sweep grid.
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15])]
        n1_values: Vec<usize>,
        /// Nt values of the sweep grid.
        #[arg(long, value_delimiter = ',', default_values_t = [5, 8, 10])]
        nt_values: Vec<usize>,
    },
    /// Write gnuplot scripts for an existing run directory.
    Plots {
        /// Run directory holding c_true.csv, c_comp.csv and convergence.csv.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// zero | ellipse | two-bars | letter-t
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Also write the noisy boundary records and the Cauchy data.
    #[arg(long)]
    dump_intermediates: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::new(SolverConfig::default(), "out"),
        };
        let s = &mut cfg.solver;
        if let Some(t) = &self.test {
            s.set("test", t)?;
        }
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    s.$field = v;
                }
            )*};
        }
        apply!(noise, seed, lambda, eps, kappa0, n1, nt, nz, max_iters);
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.dump_intermediates |= self.dump_intermediates;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(common) => {
            let cfg = match common.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match run_pipeline(&cfg) {
                Ok(out) => {
                    let r = &out.report;
                    println!(
                        "{} noise={} iterations={} converged={} max_in_inclusion={:?} l2_relative_error={:.6} -> {}",
                        r.test,
                        r.noise,
                        r.iterations,
                        r.converged,
                        r.max_in_inclusion,
                        r.l2_relative_error,
                        cfg.out_dir.display()
                    );
                    match out.status {
                        PicardStatus::Converged => ExitCode::SUCCESS,
                        PicardStatus::MaxIters | PicardStatus::Diverged => {
                            eprintln!("error: Picard iteration did not reach kappa0 = {} ({:?})", cfg.solver.kappa0, out.status);
                            ExitCode::from(2)
                        }
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep { common, n1_values, nt_values } => {
            let cfg = match common.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match sweep_cutoff(&cfg, &n1_values, &nt_values) {
                Ok(rows) => {
                    for r in rows {
                        println!("N1={:>2} Nt={:>2} sup_mismatch={:.3e}", r.n1, r.nt, r.sup_mismatch);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Plots { dir } => match emit_plots(&dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}
