//! Polynomial-exponential orthonormal bases on an interval and their tensor product.
//!
//! Each basis function is `p_n(s) e^t` where `p_n` has degree `n - 1` in the
//! centred variable `s = (t - mid) / half`. Coefficients are kept in `s`
//! rather than `t` so that evaluation stays well conditioned on intervals
//! away from the origin; the span is the same as that of `t^k e^t`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Hard cap on the number of modes per axis.
pub const MAX_MODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFamilySpec {
    pub interval: Interval,
    pub count: usize,
}

impl RawFamilySpec {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInterval { lo, hi });
        }
        if count == 0 || count > MAX_MODES {
            return Err(Error::InvalidBasisSize { got: count, max: MAX_MODES });
        }
        Ok(RawFamilySpec { interval: Interval::new(lo, hi), count })
    }
}

/// `m_k = ∫ t^k e^{2t} dt` over the interval for `k = 0..=max_degree`.
///
/// Uses `m_k = [t^k e^{2t}/2] - (k/2) m_{k-1}` run downward from a high
/// starting degree; the upward direction amplifies rounding by `k!/2^k`.
pub fn exact_moments(interval: Interval, max_degree: usize) -> Vec<f64> {
    let (lo, hi) = (interval.lo, interval.hi);
    let reach = lo.abs().max(hi.abs());
    let top = max_degree + 30 + (4.0 * std::f64::consts::E * reach).ceil() as usize;
    let bracket = |k: usize| {
        let kk = k as i32;
        0.5 * (hi.powi(kk) * (2.0 * hi).exp() - lo.powi(kk) * (2.0 * lo).exp())
    };
    let mut m = vec![0.0; top + 1];
    for k in (1..=top).rev() {
        m[k - 1] = 2.0 / k as f64 * (bracket(k) - m[k]);
    }
    m.truncate(max_degree + 1);
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    Value,
    First,
    Second,
}

impl Deriv {
    pub fn from_order(order: usize) -> Deriv {
        match order {
            0 => Deriv::Value,
            1 => Deriv::First,
            2 => Deriv::Second,
            _ => panic!("derivative order {order} is not supported"),
        }
    }
}

/// Orthonormal family `ψ_1..ψ_N` on an interval, `ψ_n(t) = (Σ_k a_{n,k} s^k) e^t`.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis1D {
    interval: Interval,
    half: f64,
    /// Row `n - 1` holds `a_{n,0..n-1}`; entries above the diagonal are zero.
    coeffs: Array2<f64>,
}

/// Gram–Schmidt of `{t^k e^t}` carried out on coefficient vectors.
///
/// The raw family is first rotated to Legendre polynomials in `s` (same span),
/// its Gram matrix is formed with a Gauss rule that is exact up to the
/// truncation of `e^{2t}`'s series, and a single Cholesky factorization
/// `G = L Lᵀ` gives the orthonormal coefficients `L⁻¹`.
pub fn orthonormalize(spec: &RawFamilySpec) -> Result<OrthonormalBasis1D> {
    let n = spec.count;
    let iv = spec.interval;
    let half = 0.5 * iv.length();
    let mid = iv.mid();

    let rule = GaussLegendre::new((2 * n + 64).max(96));
    let mut gram = Array2::<f64>::zeros((n, n));
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t = mid + half * s;
        let weight = w * half * (2.0 * t).exp();
        let p = legendre_values(n, s);
        for j in 0..n {
            for k in 0..=j {
                gram[[j, k]] += weight * p[j] * p[k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            gram[[k, j]] = gram[[j, k]];
        }
    }

    let lower = cholesky_small(&gram)?;
    let inv = lower_triangular_inverse(&lower);
    let legendre = legendre_monomials(n);
    let mut coeffs = Array2::<f64>::zeros((n, n));
    for row in 0..n {
        for j in 0..=row {
            let c = inv[[row, j]];
            for k in 0..=j {
                coeffs[[row, k]] += c * legendre[[j, k]];
            }
        }
    }
    Ok(OrthonormalBasis1D { interval: iv, half, coeffs })
}

impl OrthonormalBasis1D {
    pub fn len(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Coefficients in the centred variable `s = (t - mid) / half`.
    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    /// Maps `t` to the centred variable used by [`Self::coeffs`].
    pub fn centred(&self, t: f64) -> f64 {
        (t - self.interval.mid()) / self.half
    }

    /// `ψ_n^{(d)}(t)` for the 1-based mode number `n`.
    pub fn eval(&self, n: usize, t: f64, d: Deriv) -> f64 {
        assert!(n >= 1 && n <= self.len(), "mode {n} outside 1..={}", self.len());
        let [v, d1, d2] = self.eval_row(n - 1, t);
        match d {
            Deriv::Value => v,
            Deriv::First => d1,
            Deriv::Second => d2,
        }
    }

    /// Value, first and second derivative of every mode at `t`.
    pub fn eval_all(&self, t: f64) -> Vec<[f64; 3]> {
        (0..self.len()).map(|r| self.eval_row(r, t)).collect()
    }

    fn eval_row(&self, row: usize, t: f64) -> [f64; 3] {
        let s = self.centred(t);
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for k in (0..=row).rev() {
            ddp = ddp * s + 2.0 * dp;
            dp = dp * s + p;
            p = p * s + self.coeffs[[row, k]];
        }
        let e = t.exp();
        let dp = dp / self.half;
        let ddp = ddp / (self.half * self.half);
        [p * e, (p + dp) * e, (p + 2.0 * dp + ddp) * e]
    }
}

/// `ψ_n^{(order)}(t)` with `order ∈ {0, 1, 2}`.
pub fn eval_basis(basis: &OrthonormalBasis1D, n: usize, t: f64, order: usize) -> f64 {
    basis.eval(n, t, Deriv::from_order(order))
}

fn legendre_values(n: usize, s: f64) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[0] = 1.0;
    if n > 1 {
        p[1] = s;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * s * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

/// Row `k` holds the monomial coefficients of the Legendre polynomial `P_k`.
fn legendre_monomials(n: usize) -> Array2<f64> {
    let mut c = Array2::<f64>::zeros((n, n));
    c[[0, 0]] = 1.0;
    if n > 1 {
        c[[1, 1]] = 1.0;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        for j in 0..n {
            let shifted = if j > 0 { c[[k, j - 1]] } else { 0.0 };
            c[[k + 1, j]] = ((2.0 * kf + 1.0) * shifted - kf * c[[k - 1, j]]) / (kf + 1.0);
        }
    }
    c
}

pub(crate) fn cholesky_small(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NonPositiveDefinite { row: i, pivot: s });
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

fn lower_triangular_inverse(l: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for col in 0..n {
        inv[[col, col]] = 1.0 / l[[col, col]];
        for i in col + 1..n {
            let mut s = 0.0;
            for k in col..i {
                s -= l[[i, k]] * inv[[k, col]];
            }
            inv[[i, col]] = s / l[[i, i]];
        }
    }
    inv
}

/// Multi-index `(n1, nt)` of the tensor basis with its flat position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorBasisIndex {
    pub n1: usize,
    pub nt: usize,
    pub flat: usize,
}

impl TensorBasisIndex {
    /// From 1-based mode numbers; `nt_count` is the time cutoff `Nt`.
    pub fn from_modes(n1: usize, nt: usize, nt_count: usize) -> Self {
        assert!(n1 >= 1 && nt >= 1 && nt <= nt_count);
        TensorBasisIndex { n1, nt, flat: (n1 - 1) * nt_count + (nt - 1) }
    }

    pub fn from_flat(flat: usize, nt_count: usize) -> Self {
        TensorBasisIndex { n1: flat / nt_count + 1, nt: flat % nt_count + 1, flat }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorMode {
    Value,
    Dt,
    Dxx,
    ValueAtT0,
}

/// `P_(n1,nt)(x, t) = Ψ_{n1}(x) ψ_{nt}(t)`.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    pub x: OrthonormalBasis1D,
    pub t: OrthonormalBasis1D,
}

impl TensorBasis {
    /// Bases on `(-r, r)` in x and `(0, t_final)` in t.
    pub fn new(r: f64, t_final: f64, n1: usize, nt: usize) -> Result<Self> {
        let x = orthonormalize(&RawFamilySpec::new(-r, r, n1)?)?;
        let t = orthonormalize(&RawFamilySpec::new(0.0, t_final, nt)?)?;
        Ok(TensorBasis { x, t })
    }

    pub fn n1(&self) -> usize {
        self.x.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    /// Total number of tensor modes `|N| = N1 · Nt`.
    pub fn len(&self) -> usize {
        self.n1() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, n1: usize, nt: usize) -> TensorBasisIndex {
        TensorBasisIndex::from_modes(n1, nt, self.nt())
    }

    pub fn index_of_flat(&self, flat: usize) -> TensorBasisIndex {
        TensorBasisIndex::from_flat(flat, self.nt())
    }

    pub fn eval(&self, idx: TensorBasisIndex, x: f64, t: f64, mode: TensorMode) -> f64 {
        match mode {
            TensorMode::Value => self.x.eval(idx.n1, x, Deriv::Value) * self.t.eval(idx.nt, t, Deriv::Value),
            TensorMode::Dt => self.x.eval(idx.n1, x, Deriv::Value) * self.t.eval(idx.nt, t, Deriv::First),
            TensorMode::Dxx => self.x.eval(idx.n1, x, Deriv::Second) * self.t.eval(idx.nt, t, Deriv::Value),
            TensorMode::ValueAtT0 => {
                let t0 = self.t.interval().lo;
                self.x.eval(idx.n1, x, Deriv::Value) * self.t.eval(idx.nt, t0, Deriv::Value)
            }
        }
    }
}

pub fn eval_tensor_basis(basis: &TensorBasis, idx: TensorBasisIndex, x: f64, t: f64, mode: TensorMode) -> f64 {
    basis.eval(idx, x, t, mode)
}
