//! Explicit finite-difference solver for `u_t = Δu + c u` on `G = (-R1, R1)²`,
//! boundary data extraction on `z = ±R`, and multiplicative noise.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardGrid {
    pub r1: f64,
    pub nx1: usize,
    pub t_final: f64,
    pub nt_time: usize,
}

impl ForwardGrid {
    pub fn new(r1: f64, nx1: usize, t_final: f64, nt_time: usize) -> Result<Self> {
        if nx1 < 3 {
            return Err(Error::Config(format!("forward grid needs nx1 >= 3, got {nx1}")));
        }
        if nt_time < 2 {
            return Err(Error::Config(format!("forward grid needs nt_time >= 2, got {nt_time}")));
        }
        if !(r1 > 0.0) || !(t_final > 0.0) {
            return Err(Error::Config(format!("forward grid needs r1 > 0 and T > 0, got r1 = {r1}, T = {t_final}")));
        }
        let grid = ForwardGrid { r1, nx1, t_final, nt_time };
        let ratio = grid.ratio();
        if ratio > 0.25 {
            return Err(Error::StabilityViolation { ratio });
        }
        Ok(grid)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.r1 / (self.nx1 - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_final / (self.nt_time - 1) as f64
    }

    /// `dt / dx²`, stable for values up to 0.25.
    pub fn ratio(&self) -> f64 {
        self.dt() / (self.dx() * self.dx())
    }

    /// Node coordinate, symmetric about 0 by construction.
    pub fn coord(&self, i: usize) -> f64 {
        let m = (self.nx1 - 1) as f64;
        self.r1 * (2.0 * i as f64 - m) / m
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nx1).map(|i| self.coord(i)).collect()
    }

    pub fn time(&self, layer: usize) -> f64 {
        self.t_final * layer as f64 / (self.nt_time - 1) as f64
    }

    /// Index of the grid line through `v`, if there is one.
    pub fn line_index(&self, v: f64) -> Result<usize> {
        let k = (v + self.r1) / self.dx();
        let r = k.round();
        if (k - r).abs() > GRID_TOL || r < 0.0 || r as usize >= self.nx1 {
            return Err(Error::GridMismatch { z: v });
        }
        Ok(r as usize)
    }
}

/// Values imposed on `∂G`.
#[derive(Clone)]
pub enum BoundaryRule {
    /// Dirichlet `u = p` for all time.
    FrozenInitial,
    /// Dirichlet `u = g(x, z, t)`.
    Exact(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryRule::FrozenInitial => f.write_str("FrozenInitial"),
            BoundaryRule::Exact(_) => f.write_str("Exact(..)"),
        }
    }
}

/// Runs the explicit scheme, handing every time layer (including layer 0) to `observer`.
///
/// Arrays are indexed `[i_x, j_z]`. Only two layers are held in memory.
pub fn run_forward<F>(c_grid: &Array2<f64>, p_value: f64, grid: &ForwardGrid, rule: &BoundaryRule, mut observer: F) -> Result<()>
where
    F: FnMut(usize, ArrayView2<'_, f64>) -> Result<()>,
{
    let ratio = grid.ratio();
    if ratio > 0.25 {
        return Err(Error::StabilityViolation { ratio });
    }
    if !(p_value > 0.0) {
        return Err(Error::InvalidInitialCondition(p_value));
    }
    let n = grid.nx1;
    assert_eq!(c_grid.dim(), (n, n), "coefficient grid must match the forward grid");
    let c: Vec<f64> = c_grid.iter().copied().collect();
    let dt = grid.dt();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let xs = grid.coords();

    let mut cur = vec![p_value; n * n];
    let mut next = vec![0.0; n * n];
    observer(0, ArrayView2::from_shape((n, n), &cur).expect("layer shape"))?;

    for layer in 1..grid.nt_time {
        let t = grid.time(layer);
        let finite = next
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, row)| {
                let mut ok = true;
                for j in 0..n {
                    let v = if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                        match rule {
                            BoundaryRule::FrozenInitial => p_value,
                            BoundaryRule::Exact(g) => g(xs[i], xs[j], t),
                        }
                    } else {
                        let k = i * n + j;
                        let u = cur[k];
                        let lap = (cur[k + n] + cur[k - n] + cur[k + 1] + cur[k - 1] - 4.0 * u) * inv_dx2;
                        u + dt * (lap + c[k] * u)
                    };
                    ok &= v.is_finite();
                    row[j] = v;
                }
                ok
            })
            .reduce(|| true, |a, b| a && b);
        if !finite {
            return Err(Error::NonFiniteField { layer });
        }
        std::mem::swap(&mut cur, &mut next);
        observer(layer, ArrayView2::from_shape((n, n), &cur).expect("layer shape"))?;
    }
    Ok(())
}

/// Stored subset of the solution `u`, one array per recorded layer.
#[derive(Debug, Clone)]
pub struct ForwardField {
    pub grid: ForwardGrid,
    pub layers: Vec<Array2<f64>>,
    /// Time-layer index of each stored array.
    pub layer_indices: Vec<usize>,
}

impl ForwardField {
    pub fn times(&self) -> Vec<f64> {
        self.layer_indices.iter().map(|&l| self.grid.time(l)).collect()
    }
}

/// Solves and keeps every `record_stride`-th layer (layer 0 always kept).
pub fn solve_forward(
    c_grid: &Array2<f64>,
    p_value: f64,
    grid: &ForwardGrid,
    rule: &BoundaryRule,
    record_stride: usize,
) -> Result<ForwardField> {
    let stride = record_stride.max(1);
    let mut layers = Vec::new();
    let mut layer_indices = Vec::new();
    run_forward(c_grid, p_value, grid, rule, |l, u| {
        if l % stride == 0 {
            layers.push(u.to_owned());
            layer_indices.push(l);
        }
        Ok(())
    })?;
    Ok(ForwardField { grid: *grid, layers, layer_indices })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `z = +R`
    Top,
    /// `z = -R`
    Bottom,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Top => "top",
            Side::Bottom => "bottom",
        }
    }
}

/// Cauchy data `f = u`, `g = u_z` on one side, arrays indexed `[i_x, l_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    pub side: Side,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub f: Array2<f64>,
    pub g: Array2<f64>,
}

/// Streaming extractor of boundary records from forward layers.
#[derive(Debug, Clone)]
pub struct BoundaryRecorder {
    grid: ForwardGrid,
    stride: usize,
    i_lo: usize,
    i_hi: usize,
    j_top: usize,
    j_bottom: usize,
    times: Vec<f64>,
    top_f: Vec<f64>,
    top_g: Vec<f64>,
    bottom_f: Vec<f64>,
    bottom_g: Vec<f64>,
}

impl BoundaryRecorder {
    pub fn new(grid: &ForwardGrid, r: f64, stride: usize) -> Result<Self> {
        if !(r > 0.0 && r < grid.r1) {
            return Err(Error::Config(format!("need 0 < R < R1, got R = {r}, R1 = {}", grid.r1)));
        }
        let j_top = grid.line_index(r)?;
        let j_bottom = grid.line_index(-r)?;
        if j_bottom < 1 || j_top + 1 >= grid.nx1 || j_top - j_bottom < 4 {
            return Err(Error::GridMismatch { z: r });
        }
        Ok(BoundaryRecorder {
            grid: *grid,
            stride: stride.max(1),
            i_lo: j_bottom,
            i_hi: j_top,
            j_top,
            j_bottom,
            times: Vec::new(),
            top_f: Vec::new(),
            top_g: Vec::new(),
            bottom_f: Vec::new(),
            bottom_g: Vec::new(),
        })
    }

    pub fn observe(&mut self, layer: usize, u: ArrayView2<'_, f64>) {
        if layer % self.stride != 0 {
            return;
        }
        let h2 = 2.0 * self.grid.dx();
        let (jt, jb) = (self.j_top, self.j_bottom);
        self.times.push(self.grid.time(layer));
        for i in self.i_lo..=self.i_hi {
            self.top_f.push(u[[i, jt]]);
            self.top_g.push((3.0 * u[[i, jt]] - 4.0 * u[[i, jt - 1]] + u[[i, jt - 2]]) / h2);
            self.bottom_f.push(u[[i, jb]]);
            self.bottom_g.push((-3.0 * u[[i, jb]] + 4.0 * u[[i, jb + 1]] - u[[i, jb + 2]]) / h2);
        }
    }

    pub fn finish(self) -> (BoundaryRecord, BoundaryRecord) {
        let nx = self.i_hi - self.i_lo + 1;
        let nt = self.times.len();
        let x: Vec<f64> = (self.i_lo..=self.i_hi).map(|i| self.grid.coord(i)).collect();
        // samples were pushed time-major; transpose to [i_x, l_t]
        let shape = |v: Vec<f64>| Array2::from_shape_vec((nt, nx), v).expect("record shape").reversed_axes().as_standard_layout().into_owned();
        let top = BoundaryRecord { side: Side::Top, x: x.clone(), t: self.times.clone(), f: shape(self.top_f), g: shape(self.top_g) };
        let bottom = BoundaryRecord { side: Side::Bottom, x, t: self.times, f: shape(self.bottom_f), g: shape(self.bottom_g) };
        (top, bottom)
    }
}

/// Boundary records on `z = ±r` from every stored layer of `field`.
pub fn extract_boundary(field: &ForwardField, r: f64) -> Result<(BoundaryRecord, BoundaryRecord)> {
    let mut rec = BoundaryRecorder::new(&field.grid, r, 1)?;
    for layer in &field.layers {
        rec.observe(0, layer.view());
    }
    let (mut top, mut bottom) = rec.finish();
    let times = field.times();
    top.t.clone_from(&times);
    bottom.t = times;
    Ok((top, bottom))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

/// Multiplies every sample of `f`, then of `g`, by `1 + η`, `η ~ U[-δ, δ]`.
pub fn add_noise(record: &BoundaryRecord, spec: NoiseSpec) -> BoundaryRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    perturb(record, spec.delta, &mut rng)
}

/// Noise on both sides from one stream: top `f`, top `g`, bottom `f`, bottom `g`.
pub fn add_noise_pair(top: &BoundaryRecord, bottom: &BoundaryRecord, spec: NoiseSpec) -> (BoundaryRecord, BoundaryRecord) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t = perturb(top, spec.delta, &mut rng);
    let b = perturb(bottom, spec.delta, &mut rng);
    (t, b)
}

fn perturb(record: &BoundaryRecord, delta: f64, rng: &mut ChaCha8Rng) -> BoundaryRecord {
    let mut out = record.clone();
    if delta == 0.0 {
        return out;
    }
    let dist = Uniform::new_inclusive(-delta, delta).expect("noise level must be finite");
    // standard layout, so iteration is row-major over (x, t)
    for v in out.f.iter_mut() {
        *v *= 1.0 + dist.sample(rng);
    }
    for v in out.g.iter_mut() {
        *v *= 1.0 + dist.sample(rng);
    }
    out
}
