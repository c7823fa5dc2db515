//! Carleman-weighted quasi-reversibility solver and the Picard loop around it.

pub mod estimate;

use log::{debug, warn};
use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::banded::{relative_residual, BandedCholesky, BandedSym};
use crate::error::{Error, Result};
use crate::galerkin::{z_spacing, GalerkinOperators, ModeProfile};
use crate::reduction::CauchyData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanParams {
    pub lambda: f64,
    pub z0: f64,
    pub eps: f64,
    pub kappa0: f64,
    pub max_iters: usize,
    /// Radius `M` of the admissible ball; only used for a warning.
    pub ball_radius: f64,
}

impl Default for CarlemanParams {
    fn default() -> Self {
        CarlemanParams {
            lambda: 10.0,
            z0: -10.0,
            eps: 10f64.powf(-6.5),
            kappa0: 1e-3,
            max_iters: 50,
            ball_radius: 1e3,
        }
    }
}

impl CarlemanParams {
    pub fn validate(&self, r: f64) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::Config(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        if !(self.z0 < -r) {
            return Err(Error::Config(format!("z0 must satisfy z0 < -R = {}, got {}", -r, self.z0)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.kappa0 > 0.0) {
            return Err(Error::Config(format!("kappa0 must be > 0, got {}", self.kappa0)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.ball_radius > 0.0) {
            return Err(Error::Config(format!("ball radius M must be > 0, got {}", self.ball_radius)));
        }
        Ok(())
    }
}

/// `e^{2λ(z - z0)^{-2}}`.
pub fn weight(z: f64, params: &CarlemanParams) -> f64 {
    weight_raw(z, params.lambda, params.z0)
}

pub(crate) fn weight_raw(z: f64, lambda: f64, z0: f64) -> f64 {
    (2.0 * lambda / ((z - z0) * (z - z0))).exp()
}

/// Normal equations `A x = b` of the discrete functional, unknowns `x[i·|N| + m] = v_m(z_i)`.
#[derive(Debug, Clone)]
pub struct QuadraticSystem {
    pub matrix: BandedSym,
    pub rhs: Vec<f64>,
    pub modes: usize,
    pub zgrid: Vec<f64>,
}

/// Everything in the discrete functional that does not depend on the data.
#[derive(Debug, Clone)]
pub struct QrOperator {
    modes: usize,
    zgrid: Vec<f64>,
    h: f64,
    s: Array2<f64>,
    /// `S - (2/h²) I`.
    c0: Array2<f64>,
    alpha: Vec<f64>,
    beta_plus: f64,
    beta_minus: f64,
    eps: f64,
    matrix: BandedSym,
}

/// Second-order one-sided derivative stencils at the endpoints, as (node, coefficient).
fn endpoint_derivative(nz: usize, h: f64, top: bool) -> [(usize, f64); 3] {
    let c = 1.0 / (2.0 * h);
    if top {
        [(nz - 3, c), (nz - 2, -4.0 * c), (nz - 1, 3.0 * c)]
    } else {
        [(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
    }
}

/// First-difference stencil at node `i`: central inside, one-sided at the ends.
fn d1_stencil(nz: usize, h: f64, i: usize) -> Vec<(usize, f64)> {
    if i == 0 {
        endpoint_derivative(nz, h, false).to_vec()
    } else if i == nz - 1 {
        endpoint_derivative(nz, h, true).to_vec()
    } else {
        let c = 1.0 / (2.0 * h);
        vec![(i - 1, -c), (i + 1, c)]
    }
}

/// Second-difference stencil at node `i`; the endpoints reuse the neighbouring
/// interior stencil so that every stencil spans three consecutive nodes.
fn d2_stencil(nz: usize, h: f64, i: usize) -> [(usize, f64); 3] {
    let c = i.clamp(1, nz - 2);
    let k = 1.0 / (h * h);
    [(c - 1, k), (c, -2.0 * k), (c + 1, k)]
}

impl QrOperator {
    pub fn new(ops: &GalerkinOperators, params: &CarlemanParams, zgrid: &[f64]) -> Result<Self> {
        let nz = zgrid.len();
        if nz < 5 {
            return Err(Error::Config(format!("z-grid needs nz >= 5, got {nz}")));
        }
        let r = zgrid[nz - 1];
        params.validate(r)?;
        let nm = ops.modes();
        let h = z_spacing(zgrid);
        let inv_h2 = 1.0 / (h * h);
        let mut c0 = ops.s.clone();
        for m in 0..nm {
            c0[[m, m]] -= 2.0 * inv_h2;
        }
        let alpha: Vec<f64> = zgrid.iter().map(|&z| weight(z, params) * h).collect();
        let l4 = params.lambda.powi(4);
        let beta_plus = l4 * weight(zgrid[nz - 1], params);
        let beta_minus = l4 * weight(zgrid[0], params);

        let mut a = BandedSym::zeros(nz * nm, 3 * nm - 1);
        let ctc = c0.t().dot(&c0);
        let inv_h4 = inv_h2 * inv_h2;
        for i in 1..nz - 1 {
            let al = alpha[i];
            add_dense_block(&mut a, nm, i, i, &ctc, al);
            add_identity_block(&mut a, nm, i - 1, i - 1, al * inv_h4);
            add_identity_block(&mut a, nm, i + 1, i + 1, al * inv_h4);
            add_identity_block(&mut a, nm, i + 1, i - 1, al * inv_h4);
            // block (i, i-1) gets C0ᵀ/h², block (i+1, i) gets C0/h²
            add_dense_block_transposed(&mut a, nm, i, i - 1, &c0, al * inv_h2);
            add_dense_block(&mut a, nm, i + 1, i, &c0, al * inv_h2);
        }
        let scalar_terms = |a: &mut BandedSym, st: &[(usize, f64)], coef: f64| {
            for &(p, cp) in st {
                for &(q, cq) in st {
                    if p >= q {
                        add_identity_block(a, nm, p, q, coef * cp * cq);
                    }
                }
            }
        };
        scalar_terms(&mut a, &[(nz - 1, 1.0)], beta_plus);
        scalar_terms(&mut a, &[(0, 1.0)], beta_minus);
        scalar_terms(&mut a, &endpoint_derivative(nz, h, true), beta_plus);
        scalar_terms(&mut a, &endpoint_derivative(nz, h, false), beta_minus);
        let reg = params.eps * h;
        for i in 0..nz {
            scalar_terms(&mut a, &[(i, 1.0)], reg);
            scalar_terms(&mut a, &d1_stencil(nz, h, i), reg);
            scalar_terms(&mut a, &d2_stencil(nz, h, i), reg);
        }
        Ok(QrOperator {
            modes: nm,
            zgrid: zgrid.to_vec(),
            h,
            s: ops.s.clone(),
            c0,
            alpha,
            beta_plus,
            beta_minus,
            eps: params.eps,
            matrix: a,
        })
    }

    pub fn matrix(&self) -> &BandedSym {
        &self.matrix
    }

    pub fn zgrid(&self) -> &[f64] {
        &self.zgrid
    }

    pub fn rhs(&self, f_source: Option<&Array2<f64>>, cauchy: &CauchyData) -> Vec<f64> {
        let nm = self.modes;
        let nz = self.zgrid.len();
        let mut b = vec![0.0; nm * nz];
        let mut add = |node: usize, vals: &Array1<f64>, coef: f64| {
            for (m, v) in vals.iter().enumerate() {
                b[node * nm + m] += coef * v;
            }
        };
        add(nz - 1, &cauchy.p_plus, self.beta_plus);
        add(0, &cauchy.p_minus, self.beta_minus);
        for (node, c) in endpoint_derivative(nz, self.h, true) {
            add(node, &cauchy.q_plus, self.beta_plus * c);
        }
        for (node, c) in endpoint_derivative(nz, self.h, false) {
            add(node, &cauchy.q_minus, self.beta_minus * c);
        }
        if let Some(f) = f_source {
            assert_eq!(f.dim(), (nm, nz), "F_source must be sampled on the z-grid");
            let inv_h2 = 1.0 / (self.h * self.h);
            for i in 1..nz - 1 {
                let fi = f.column(i).to_owned();
                let al = self.alpha[i];
                add(i - 1, &fi, -al * inv_h2);
                add(i + 1, &fi, -al * inv_h2);
                add(i, &self.c0.t().dot(&fi), -al);
            }
        }
        b
    }

    pub fn system(&self, f_source: Option<&Array2<f64>>, cauchy: &CauchyData) -> QuadraticSystem {
        QuadraticSystem { matrix: self.matrix.clone(), rhs: self.rhs(f_source, cauchy), modes: self.modes, zgrid: self.zgrid.clone() }
    }

    /// The discrete functional evaluated term by term from its definition.
    pub fn functional(&self, x: &[f64], f_source: Option<&Array2<f64>>, cauchy: &CauchyData) -> f64 {
        let nm = self.modes;
        let nz = self.zgrid.len();
        let h = self.h;
        let v = |i: usize| Array1::from_iter(x[i * nm..(i + 1) * nm].iter().copied());
        let sq = |a: &Array1<f64>| a.iter().map(|t| t * t).sum::<f64>();
        let combo = |st: &[(usize, f64)]| {
            let mut acc = Array1::zeros(nm);
            for &(node, c) in st {
                acc.scaled_add(c, &v(node));
            }
            acc
        };
        let mut j = 0.0;
        for i in 1..nz - 1 {
            let mut r = (&v(i - 1) - &(2.0 * &v(i)) + &v(i + 1)) / (h * h) + self.s.dot(&v(i));
            if let Some(f) = f_source {
                r += &f.column(i);
            }
            j += self.alpha[i] * sq(&r);
        }
        j += self.beta_plus * (sq(&(&v(nz - 1) - &cauchy.p_plus)) + sq(&(&combo(&endpoint_derivative(nz, h, true)) - &cauchy.q_plus)));
        j += self.beta_minus * (sq(&(&v(0) - &cauchy.p_minus)) + sq(&(&combo(&endpoint_derivative(nz, h, false)) - &cauchy.q_minus)));
        let mut reg = 0.0;
        for i in 0..nz {
            reg += sq(&v(i)) + sq(&combo(&d1_stencil(nz, h, i))) + sq(&combo(&d2_stencil(nz, h, i)));
        }
        j + self.eps * h * reg
    }
}

fn add_identity_block(a: &mut BandedSym, nm: usize, bi: usize, bj: usize, coef: f64) {
    debug_assert!(bi >= bj);
    for p in 0..nm {
        a.add_lower(bi * nm + p, bj * nm + p, coef);
    }
}

/// Adds `coef · M` to block `(bi, bj)`, `bi >= bj`; only the lower triangle of diagonal blocks.
fn add_dense_block(a: &mut BandedSym, nm: usize, bi: usize, bj: usize, m: &Array2<f64>, coef: f64) {
    debug_assert!(bi >= bj);
    for p in 0..nm {
        let qmax = if bi == bj { p + 1 } else { nm };
        for q in 0..qmax {
            a.add_lower(bi * nm + p, bj * nm + q, coef * m[[p, q]]);
        }
    }
}

fn add_dense_block_transposed(a: &mut BandedSym, nm: usize, bi: usize, bj: usize, m: &Array2<f64>, coef: f64) {
    debug_assert!(bi > bj);
    for p in 0..nm {
        for q in 0..nm {
            a.add_lower(bi * nm + p, bj * nm + q, coef * m[[q, p]]);
        }
    }
}

pub fn build_normal_equations(
    ops: &GalerkinOperators,
    f_source: Option<&Array2<f64>>,
    cauchy: &CauchyData,
    params: &CarlemanParams,
    zgrid: &[f64],
) -> Result<QuadraticSystem> {
    Ok(QrOperator::new(ops, params, zgrid)?.system(f_source, cauchy))
}

const REL_RESIDUAL_TARGET: f64 = 1e-8;
const MAX_REFINEMENT: usize = 8;

fn solve_with(chol: &BandedCholesky, a: &BandedSym, b: &[f64]) -> Vec<f64> {
    let mut x = chol.solve(b);
    for _ in 0..MAX_REFINEMENT {
        if relative_residual(a, &x, b) <= REL_RESIDUAL_TARGET * 1e-2 {
            break;
        }
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        for (xi, di) in x.iter_mut().zip(chol.solve(&r)) {
            *xi += di;
        }
    }
    x
}

/// Minimizer as a `[m, i]` array.
pub fn minimize(system: &QuadraticSystem) -> Result<Array2<f64>> {
    let chol = BandedCholesky::factor(&system.matrix)?;
    let x = solve_with(&chol, &system.matrix, &system.rhs);
    Ok(unflatten(&x, system.modes, system.zgrid.len()))
}

pub(crate) fn unflatten(x: &[f64], nm: usize, nz: usize) -> Array2<f64> {
    Array2::from_shape_fn((nm, nz), |(m, i)| x[i * nm + m])
}

pub fn flatten(values: &Array2<f64>) -> Vec<f64> {
    let (nm, nz) = values.dim();
    let mut x = vec![0.0; nm * nz];
    for i in 0..nz {
        for m in 0..nm {
            x[i * nm + m] = values[[m, i]];
        }
    }
    x
}

/// Factorized operator reused across Picard steps; only the right-hand side changes.
#[derive(Debug, Clone)]
pub struct QrSolver {
    op: QrOperator,
    chol: BandedCholesky,
}

impl QrSolver {
    pub fn new(ops: &GalerkinOperators, params: &CarlemanParams, zgrid: &[f64]) -> Result<Self> {
        let op = QrOperator::new(ops, params, zgrid)?;
        let chol = BandedCholesky::factor(op.matrix())?;
        Ok(QrSolver { op, chol })
    }

    pub fn operator(&self) -> &QrOperator {
        &self.op
    }

    pub fn solve(&self, f_source: Option<&Array2<f64>>, cauchy: &CauchyData) -> ModeProfile {
        let b = self.op.rhs(f_source, cauchy);
        let x = solve_with(&self.chol, self.op.matrix(), &b);
        ModeProfile { zgrid: self.op.zgrid.clone(), values: unflatten(&x, self.op.modes, self.op.zgrid.len()) }
    }

    pub fn functional(&self, profile: &ModeProfile, f_source: Option<&Array2<f64>>, cauchy: &CauchyData) -> f64 {
        self.op.functional(&flatten(&profile.values), f_source, cauchy)
    }
}

/// Minimizer of the functional without the nonlinear term.
pub fn initial_guess(ops: &GalerkinOperators, cauchy: &CauchyData, params: &CarlemanParams, zgrid: &[f64]) -> Result<ModeProfile> {
    Ok(QrSolver::new(ops, params, zgrid)?.solve(None, cauchy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub l2_change: f64,
    pub rel_linf_change: f64,
    pub j_value: f64,
    pub h2_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn l2_changes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.l2_change).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStatus {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub profile: ModeProfile,
    pub trace: IterationTrace,
    pub status: PicardStatus,
}

impl PicardOutcome {
    pub fn converged(&self) -> bool {
        self.status == PicardStatus::Converged
    }
}

/// `‖v‖_{L²(-R,R)}` with trapezoid weights in z, summed over modes.
pub fn l2_norm(values: &Array2<f64>, h: f64) -> f64 {
    let nz = values.ncols();
    let mut s = 0.0;
    for (i, col) in values.columns().into_iter().enumerate() {
        let w = if i == 0 || i == nz - 1 { 0.5 * h } else { h };
        s += w * col.iter().map(|v| v * v).sum::<f64>();
    }
    s.sqrt()
}

/// Discrete `H²` norm with the regularization stencils.
pub fn h2_norm(profile: &ModeProfile) -> f64 {
    let nz = profile.nz();
    let h = profile.h();
    let x = flatten(&profile.values);
    let nm = profile.modes();
    let mut s = 0.0;
    let mut apply = |st: &[(usize, f64)]| {
        for m in 0..nm {
            let v: f64 = st.iter().map(|&(node, c)| c * x[node * nm + m]).sum();
            s += v * v;
        }
    };
    for i in 0..nz {
        apply(&[(i, 1.0)]);
        apply(&d1_stencil(nz, h, i));
        apply(&d2_stencil(nz, h, i));
    }
    (h * s).sqrt()
}

/// Initial guess, then `v ← argmin J(·; F(v))` until the L² change drops below `κ0`.
pub fn picard_iterate(ops: &GalerkinOperators, cauchy: &CauchyData, params: &CarlemanParams, zgrid: &[f64]) -> Result<PicardOutcome> {
    let solver = QrSolver::new(ops, params, zgrid)?;
    picard_with_solver(&solver, ops, cauchy, params)
}

pub fn picard_with_solver(solver: &QrSolver, ops: &GalerkinOperators, cauchy: &CauchyData, params: &CarlemanParams) -> Result<PicardOutcome> {
    let mut current = solver.solve(None, cauchy);
    let h = current.h();
    let mut trace = IterationTrace::default();
    for k in 1..=params.max_iters {
        let f_source = ops.eval_f_profile(&current);
        let next = solver.solve(Some(&f_source), cauchy);
        let diff = &next.values - &current.values;
        let l2_change = l2_norm(&diff, h);
        let linf_diff = diff.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let linf_next = next.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let rel_linf_change = if linf_next > 0.0 { linf_diff / linf_next } else { linf_diff };
        let j_value = solver.functional(&next, Some(&f_source), cauchy);
        let h2 = h2_norm(&next);
        trace.records.push(IterationRecord { k, l2_change, rel_linf_change, j_value, h2_norm: h2 });
        debug!("picard k={k} l2_change={l2_change:.3e} rel_linf={rel_linf_change:.3e} J={j_value:.3e}");
        if h2 > params.ball_radius {
            warn!("iterate {k} has discrete H2 norm {h2:.3e} above M = {}", params.ball_radius);
        }
        if !l2_change.is_finite() || !next.values.iter().all(|v| v.is_finite()) {
            // keep the last finite iterate
            return Ok(PicardOutcome { profile: current, trace, status: PicardStatus::Diverged });
        }
        current = next;
        if l2_change <= params.kappa0 {
            return Ok(PicardOutcome { profile: current, trace, status: PicardStatus::Converged });
        }
    }
    Ok(PicardOutcome { profile: current, trace, status: PicardStatus::MaxIters })
}

pub fn picard_solve(ops: &GalerkinOperators, cauchy: &CauchyData, params: &CarlemanParams, zgrid: &[f64]) -> Result<(ModeProfile, IterationTrace)> {
    let out = picard_iterate(ops, cauchy, params, zgrid)?;
    match out.status {
        PicardStatus::Converged => Ok((out.profile, out.trace)),
        PicardStatus::MaxIters => Err(Error::MaxItersExceeded { trace: out.trace }),
        PicardStatus::Diverged => Err(Error::Diverged { iteration: out.trace.iterations(), trace: out.trace }),
    }
}
