//! Run configuration: defaults, `key = value` parsing and validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::carleman::CarlemanParams;
use crate::error::{Error, Result};
use crate::forward::{ForwardGrid, NoiseSpec};
use crate::phantoms::PhantomSpec;
use crate::reduction::CutoffSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub r: f64,
    pub r1: f64,
    pub t_final: f64,
    pub nx1: usize,
    pub nt_time: usize,
    pub n1: usize,
    pub nt: usize,
    pub nz: usize,
    pub lambda: f64,
    pub z0: f64,
    pub eps: f64,
    pub kappa0: f64,
    pub max_iters: usize,
    pub ball_radius: f64,
    pub noise: f64,
    pub seed: u64,
    pub p_value: f64,
    pub reduce_time_stride: usize,
    pub phantom: PhantomSpec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let c = CarlemanParams::default();
        SolverConfig {
            r: 1.0,
            r1: 3.0,
            t_final: 0.5,
            nx1: 241,
            nt_time: 4001,
            n1: 15,
            nt: 10,
            nz: 81,
            lambda: c.lambda,
            z0: c.z0,
            eps: c.eps,
            kappa0: c.kappa0,
            max_iters: c.max_iters,
            ball_radius: c.ball_radius,
            noise: 0.05,
            seed: 1,
            p_value: 2.0,
            reduce_time_stride: 10,
            phantom: PhantomSpec::Ellipse,
        }
    }
}

impl SolverConfig {
    pub fn carleman(&self) -> CarlemanParams {
        CarlemanParams {
            lambda: self.lambda,
            z0: self.z0,
            eps: self.eps,
            kappa0: self.kappa0,
            max_iters: self.max_iters,
            ball_radius: self.ball_radius,
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec { delta: self.noise, seed: self.seed }
    }

    pub fn cutoff(&self) -> Result<CutoffSpec> {
        CutoffSpec::new(self.n1, self.nt)
    }

    pub fn grid(&self) -> Result<ForwardGrid> {
        ForwardGrid::new(self.r1, self.nx1, self.t_final, self.nt_time)
    }

    /// Checks every precondition of the pipeline; the message names the violated one.
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !(self.r1 > self.r) {
            return Err(Error::Config(format!("need 0 < R < R1, got R = {}, R1 = {}", self.r, self.r1)));
        }
        let grid = self.grid()?;
        grid.line_index(self.r)?;
        grid.line_index(-self.r)?;
        if self.reduce_time_stride == 0 || (self.nt_time - 1) % self.reduce_time_stride != 0 {
            return Err(Error::Config(format!(
                "reduce_time_stride = {} must divide nt_time - 1 = {}",
                self.reduce_time_stride,
                self.nt_time - 1
            )));
        }
        self.cutoff()?;
        if self.nz < 5 {
            return Err(Error::Config(format!("nz must be >= 5, got {}", self.nz)));
        }
        self.carleman().validate(self.r)?;
        if !(self.noise >= 0.0 && self.noise < 1.0) {
            return Err(Error::Config(format!("noise must satisfy 0 <= noise < 1, got {}", self.noise)));
        }
        if !(self.p_value > 0.0) {
            return Err(Error::InvalidInitialCondition(self.p_value));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("cannot parse value '{v}' for key '{key}'")))
        }
        let v = value.trim();
        match key.trim() {
            "R" | "r" => self.r = num(key, v)?,
            "R1" | "r1" => self.r1 = num(key, v)?,
            "T" | "t_final" => self.t_final = num(key, v)?,
            "nx1" => self.nx1 = num(key, v)?,
            "nt_time" => self.nt_time = num(key, v)?,
            "n1" | "N1" => self.n1 = num(key, v)?,
            "nt" | "Nt" => self.nt = num(key, v)?,
            "nz" => self.nz = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "z0" => self.z0 = num(key, v)?,
            "eps" => self.eps = num(key, v)?,
            "kappa0" => self.kappa0 = num(key, v)?,
            "max_iters" => self.max_iters = num(key, v)?,
            "M" | "ball_radius" => self.ball_radius = num(key, v)?,
            "noise" => self.noise = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "p" | "p_value" => self.p_value = num(key, v)?,
            "reduce_time_stride" => self.reduce_time_stride = num(key, v)?,
            "test" => self.phantom = v.parse().map_err(Error::Config)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let pairs: [(&str, String); 19] = [
            ("test", self.phantom.name().to_string()),
            ("R", self.r.to_string()),
            ("R1", self.r1.to_string()),
            ("T", self.t_final.to_string()),
            ("nx1", self.nx1.to_string()),
            ("nt_time", self.nt_time.to_string()),
            ("n1", self.n1.to_string()),
            ("nt", self.nt.to_string()),
            ("nz", self.nz.to_string()),
            ("lambda", self.lambda.to_string()),
            ("z0", self.z0.to_string()),
            ("eps", self.eps.to_string()),
            ("kappa0", self.kappa0.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("M", self.ball_radius.to_string()),
            ("noise", self.noise.to_string()),
            ("seed", self.seed.to_string()),
            ("p", self.p_value.to_string()),
            ("reduce_time_stride", self.reduce_time_stride.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub dump_intermediates: bool,
}

impl RunConfig {
    pub fn new(solver: SolverConfig, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig { solver, out_dir: out_dir.into(), dump_intermediates: false }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()
    }
}

/// Parses `key = value` lines; `#` starts a comment. `out` and `dump_intermediates` are accepted too.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(SolverConfig::default(), "out");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)))?;
        match k.trim() {
            "out" => cfg.out_dir = PathBuf::from(v.trim()),
            "dump_intermediates" => {
                cfg.dump_intermediates = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("line {}: dump_intermediates must be true or false", lineno + 1)))?
            }
            key => cfg.solver.set(key, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?,
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.solver.eps, 10f64.powf(-6.5));
    }

    #[test]
    fn unstable_ratio_is_named() {
        let cfg = parse_config("nt_time = 2668\nreduce_time_stride = 1\n").unwrap();
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("dt/dx^2"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("frobnicate = 3").unwrap_err().to_string();
        assert!(err.contains("frobnicate"));
    }

    #[test]
    fn round_trip_through_text() {
        let mut s = SolverConfig::default();
        s.phantom = PhantomSpec::TwoBars;
        s.noise = 0.0;
        let back = parse_config(&s.to_key_values()).unwrap();
        assert_eq!(back.solver, s);
    }
}
