//! Projection of boundary data onto the tensor basis and the Cauchy data of the reduced system.

use ndarray::{Array1, Array2, Axis};

use crate::basis::{cholesky_small, Deriv, TensorBasis, MAX_MODES};
use crate::error::{Error, Result};
use crate::forward::BoundaryRecord;
use crate::quadrature::trapezoid_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffSpec {
    pub n1: usize,
    pub nt: usize,
}

impl CutoffSpec {
    pub fn new(n1: usize, nt: usize) -> Result<Self> {
        for (name, v) in [("N1", n1), ("Nt", nt)] {
            if v == 0 || v > MAX_MODES {
                return Err(Error::Config(format!("cutoff {name} must satisfy 1 <= {name} <= {MAX_MODES}, got {v}")));
            }
        }
        Ok(CutoffSpec { n1, nt })
    }

    pub fn modes(&self) -> usize {
        self.n1 * self.nt
    }
}

/// Endpoint tensors `𝒫(±R)`, `𝒬(±R)` indexed by flat tensor index.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub p_plus: Array1<f64>,
    pub p_minus: Array1<f64>,
    pub q_plus: Array1<f64>,
    pub q_minus: Array1<f64>,
}

impl CauchyData {
    pub fn zeros(modes: usize) -> Self {
        CauchyData {
            p_plus: Array1::zeros(modes),
            p_minus: Array1::zeros(modes),
            q_plus: Array1::zeros(modes),
            q_minus: Array1::zeros(modes),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.p_plus, &self.p_minus, &self.q_plus, &self.q_minus].iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Projection onto the tensor basis sampled on a fixed `(x, t)` grid.
///
/// Coefficients are the least-squares fit in the trapezoid inner product,
/// i.e. trapezoid moments multiplied by the inverse discrete Gram matrix of
/// each factor. On 81 x-samples the high `Ψ_n` are far from discretely
/// orthonormal, so the raw moments alone do not reproduce a basis mode.
#[derive(Debug, Clone)]
pub struct Projector {
    nt: usize,
    px: Array2<f64>,
    pt: Array2<f64>,
    dpt: Array2<f64>,
    px_w: Array2<f64>,
    pt_w: Array2<f64>,
    gx: Array2<f64>,
    gt: Array2<f64>,
}

impl Projector {
    /// `xs`, `ts` must be uniform.
    pub fn new(basis: &TensorBasis, xs: &[f64], ts: &[f64]) -> Result<Self> {
        let (n1, nt) = (basis.n1(), basis.nt());
        if xs.len() < n1 || ts.len() < nt {
            return Err(Error::Config(format!(
                "sample grid {}x{} too coarse for cutoff ({n1}, {nt})",
                xs.len(),
                ts.len()
            )));
        }
        let wx = trapezoid_weights(xs.len(), spacing(xs));
        let wt = trapezoid_weights(ts.len(), spacing(ts));
        let mut px = Array2::zeros((n1, xs.len()));
        for (i, &x) in xs.iter().enumerate() {
            for (n, v) in basis.x.eval_all(x).into_iter().enumerate() {
                px[[n, i]] = v[0];
            }
        }
        let mut pt = Array2::zeros((nt, ts.len()));
        let mut dpt = Array2::zeros((nt, ts.len()));
        for (l, &t) in ts.iter().enumerate() {
            for (n, v) in basis.t.eval_all(t).into_iter().enumerate() {
                pt[[n, l]] = v[0];
                dpt[[n, l]] = v[1];
            }
        }
        let px_w = &px * &Array1::from(wx).insert_axis(Axis(0));
        let pt_w = &pt * &Array1::from(wt).insert_axis(Axis(0));
        let gx = cholesky_small(&px_w.dot(&px.t()))?;
        let gt = cholesky_small(&pt_w.dot(&pt.t()))?;
        Ok(Projector { nt, px, pt, dpt, px_w, pt_w, gx, gt })
    }

    pub fn modes(&self) -> usize {
        self.px.nrows() * self.nt
    }

    /// Coefficients `c_n` of `data[i_x, l_t]`, flat order.
    pub fn fourier_coeffs(&self, data: &Array2<f64>) -> Array1<f64> {
        let moments = self.px_w.dot(data).dot(&self.pt_w.t());
        let left = chol_solve_cols(&self.gx, &moments);
        let c = chol_solve_cols(&self.gt, &left.t().to_owned()).reversed_axes();
        Array1::from_iter(c.iter().copied())
    }

    /// `Σ c_n P_n` on the sample grid.
    pub fn reconstruct(&self, coeffs: &Array1<f64>) -> Array2<f64> {
        let c = self.coeff_matrix(coeffs);
        self.px.t().dot(&c).dot(&self.pt)
    }

    /// `Σ c_n Ψ_{n1} ψ'_{nt}` on the sample grid.
    pub fn reconstruct_dt(&self, coeffs: &Array1<f64>) -> Array2<f64> {
        let c = self.coeff_matrix(coeffs);
        self.px.t().dot(&c).dot(&self.dpt)
    }

    pub fn spectral_time_derivative(&self, data: &Array2<f64>) -> Array2<f64> {
        self.reconstruct_dt(&self.fourier_coeffs(data))
    }

    pub fn mismatch_sup(&self, data: &Array2<f64>) -> f64 {
        let fit = self.reconstruct(&self.fourier_coeffs(data));
        (&fit - data).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn coeff_matrix(&self, coeffs: &Array1<f64>) -> Array2<f64> {
        let n1 = self.px.nrows();
        assert_eq!(coeffs.len(), n1 * self.nt, "coefficient vector length");
        Array2::from_shape_vec((n1, self.nt), coeffs.to_vec()).expect("coefficient shape")
    }
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
}

/// Solves `L Lᵀ X = B` column by column.
fn chol_solve_cols(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for mut col in x.columns_mut() {
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[[i, k]] * col[k];
            }
            col[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[[k, i]] * col[k];
            }
            col[i] = s / l[[i, i]];
        }
    }
    x
}

pub fn fourier_coeffs(data: &Array2<f64>, basis: &TensorBasis, xs: &[f64], ts: &[f64]) -> Result<Array1<f64>> {
    Ok(Projector::new(basis, xs, ts)?.fourier_coeffs(data))
}

pub fn mismatch_sup(data: &Array2<f64>, basis: &TensorBasis, xs: &[f64], ts: &[f64]) -> Result<f64> {
    Ok(Projector::new(basis, xs, ts)?.mismatch_sup(data))
}

pub fn spectral_time_derivative(data: &Array2<f64>, basis: &TensorBasis, xs: &[f64], ts: &[f64]) -> Result<Array2<f64>> {
    Ok(Projector::new(basis, xs, ts)?.spectral_time_derivative(data))
}

/// `𝒫(±R)` from `f_t`, `𝒬(±R)` from `g_t`, both differentiated spectrally.
pub fn build_cauchy_data(top: &BoundaryRecord, bottom: &BoundaryRecord, projector: &Projector) -> Result<CauchyData> {
    if top.x != bottom.x || top.t != bottom.t {
        return Err(Error::Config("top and bottom records must share the sample grid".into()));
    }
    let coeffs_of_dt = |d: &Array2<f64>| projector.fourier_coeffs(&projector.spectral_time_derivative(d));
    Ok(CauchyData {
        p_plus: coeffs_of_dt(&top.f),
        p_minus: coeffs_of_dt(&bottom.f),
        q_plus: coeffs_of_dt(&top.g),
        q_minus: coeffs_of_dt(&bottom.g),
    })
}

/// Samples of a single tensor mode on `xs × ts` (used by tests and diagnostics).
pub fn sample_mode(basis: &TensorBasis, n1: usize, nt: usize, xs: &[f64], ts: &[f64], time_deriv: bool) -> Array2<f64> {
    let d = if time_deriv { Deriv::First } else { Deriv::Value };
    Array2::from_shape_fn((xs.len(), ts.len()), |(i, l)| basis.x.eval(n1, xs[i], Deriv::Value) * basis.t.eval(nt, ts[l], d))
}
