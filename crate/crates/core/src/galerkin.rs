//! Operators of the reduced system `v'' + S v + F(v) = 0`.

use ndarray::{Array1, Array2, Array3, ArrayView1};
use rayon::prelude::*;

use crate::basis::TensorBasis;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const QUAD_NODES: usize = 96;

/// Mode values `v_m(z_i)` on a uniform z-grid, array indexed `[m, i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub zgrid: Vec<f64>,
    pub values: Array2<f64>,
}

impl ModeProfile {
    pub fn zeros(modes: usize, zgrid: Vec<f64>) -> Self {
        let nz = zgrid.len();
        ModeProfile { zgrid, values: Array2::zeros((modes, nz)) }
    }

    pub fn modes(&self) -> usize {
        self.values.nrows()
    }

    pub fn nz(&self) -> usize {
        self.zgrid.len()
    }

    pub fn h(&self) -> f64 {
        z_spacing(&self.zgrid)
    }
}

/// `nz` uniform points on `[-r, r]` with exact endpoints.
pub fn uniform_zgrid(r: f64, nz: usize) -> Result<Vec<f64>> {
    if nz < 5 {
        return Err(Error::Config(format!("z-grid needs nz >= 5, got {nz}")));
    }
    let m = (nz - 1) as f64;
    Ok((0..nz).map(|i| r * (2.0 * i as f64 - m) / m).collect())
}

pub(crate) fn z_spacing(z: &[f64]) -> f64 {
    (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64
}

#[derive(Debug, Clone)]
pub struct GalerkinOperators {
    pub s: Array2<f64>,
    /// `B[m][n][n']`.
    pub b: Array3<f64>,
    pub l: Array2<f64>,
    pub p_value: f64,
    n1: usize,
    nt: usize,
    /// `∫ Ψ_a Ψ_b Ψ_m dx`, indexed `[a, b, m]`.
    x_triple: Array3<f64>,
    psi_t0: Vec<f64>,
    /// `∫ ψ'_n ψ_m dt`, indexed `[n, m]`.
    pub time_drift: Array2<f64>,
    /// `∫ Ψ''_n Ψ_m dx`, indexed `[n, m]`.
    pub x_laplacian: Array2<f64>,
}

/// `∫ψ'_n ψ_m dt` and `∫Ψ''_n Ψ_m dx`, Gauss–Legendre per factor.
fn one_d_factors(basis: &TensorBasis) -> (Array2<f64>, Array2<f64>) {
    let (n1, nt) = (basis.n1(), basis.nt());
    let ti = basis.t.interval();
    let xi = basis.x.interval();
    let tr = GaussLegendre::on_interval(QUAD_NODES, ti.lo, ti.hi);
    let xr = GaussLegendre::on_interval(QUAD_NODES, xi.lo, xi.hi);
    let mut drift = Array2::zeros((nt, nt));
    for (&t, &w) in tr.nodes.iter().zip(&tr.weights) {
        let v = basis.t.eval_all(t);
        for n in 0..nt {
            for m in 0..nt {
                drift[[n, m]] += w * v[n][1] * v[m][0];
            }
        }
    }
    let mut lap = Array2::zeros((n1, n1));
    for (&x, &w) in xr.nodes.iter().zip(&xr.weights) {
        let v = basis.x.eval_all(x);
        for n in 0..n1 {
            for m in 0..n1 {
                lap[[n, m]] += w * v[n][2] * v[m][0];
            }
        }
    }
    (drift, lap)
}

/// `s_mn = -∫ψ'_{nt}ψ_{mt} δ_{n1 m1} + ∫Ψ''_{n1}Ψ_{m1} δ_{nt mt}`.
pub fn assemble_s(basis: &TensorBasis) -> Array2<f64> {
    let (drift, lap) = one_d_factors(basis);
    s_from_factors(basis, &drift, &lap)
}

fn s_from_factors(basis: &TensorBasis, drift: &Array2<f64>, lap: &Array2<f64>) -> Array2<f64> {
    let nm = basis.len();
    let mut s = Array2::zeros((nm, nm));
    for m in 0..nm {
        let im = basis.index_of_flat(m);
        for n in 0..nm {
            let inn = basis.index_of_flat(n);
            let mut v = 0.0;
            if inn.n1 == im.n1 {
                v -= drift[[inn.nt - 1, im.nt - 1]];
            }
            if inn.nt == im.nt {
                v += lap[[inn.n1 - 1, im.n1 - 1]];
            }
            s[[m, n]] = v;
        }
    }
    s
}

fn x_triple_products(basis: &TensorBasis) -> Array3<f64> {
    let n1 = basis.n1();
    let xi = basis.x.interval();
    let xr = GaussLegendre::on_interval(QUAD_NODES, xi.lo, xi.hi);
    let mut tx = Array3::zeros((n1, n1, n1));
    for (&x, &w) in xr.nodes.iter().zip(&xr.weights) {
        let v: Vec<f64> = basis.x.eval_all(x).iter().map(|d| d[0]).collect();
        for a in 0..n1 {
            for b in 0..n1 {
                let ab = w * v[a] * v[b];
                for m in 0..n1 {
                    tx[[a, b, m]] += ab * v[m];
                }
            }
        }
    }
    tx
}

/// Projected quadratic term and the `Δp` correction for constant `p`.
///
/// `B[m][n][n'] = (1/p) (∫Ψ_{n1}Ψ_{n'1}Ψ_{m1}) ψ_{nt}(0) δ_{n't, mt}`; the time
/// factor uses exact orthonormality of `ψ`. `L ≡ 0` since `Δp = 0`.
pub fn assemble_nonlinearity(basis: &TensorBasis, p_value: f64) -> Result<(Array3<f64>, Array2<f64>)> {
    if !(p_value > 0.0) {
        return Err(Error::InvalidInitialCondition(p_value));
    }
    let tx = x_triple_products(basis);
    let psi_t0 = time_values_at_zero(basis);
    Ok((dense_b(basis, &tx, &psi_t0, p_value), Array2::zeros((basis.len(), basis.len()))))
}

fn time_values_at_zero(basis: &TensorBasis) -> Vec<f64> {
    let t0 = basis.t.interval().lo;
    basis.t.eval_all(t0).iter().map(|d| d[0]).collect()
}

fn dense_b(basis: &TensorBasis, tx: &Array3<f64>, psi_t0: &[f64], p_value: f64) -> Array3<f64> {
    let nm = basis.len();
    let nt = basis.nt();
    let mut b = Array3::zeros((nm, nm, nm));
    let n1 = basis.n1();
    let data = b.as_slice_mut().expect("fresh array is contiguous");
    data.par_chunks_mut(nm * nm).enumerate().for_each(|(m, slab)| {
        let (m1, mt) = (m / nt, m % nt);
        for n in 0..nm {
            let (na, nb) = (n / nt, n % nt);
            for np1 in 0..n1 {
                let np = np1 * nt + mt;
                slab[n * nm + np] = tx[[na, np1, m1]] * psi_t0[nb] / p_value;
            }
        }
    });
    b
}

impl GalerkinOperators {
    pub fn new(basis: &TensorBasis, p_value: f64) -> Result<Self> {
        if !(p_value > 0.0) {
            return Err(Error::InvalidInitialCondition(p_value));
        }
        let (drift, lap) = one_d_factors(basis);
        let s = s_from_factors(basis, &drift, &lap);
        let x_triple = x_triple_products(basis);
        let psi_t0 = time_values_at_zero(basis);
        let b = dense_b(basis, &x_triple, &psi_t0, p_value);
        let nm = basis.len();
        Ok(GalerkinOperators {
            s,
            b,
            l: Array2::zeros((nm, nm)),
            p_value,
            n1: basis.n1(),
            nt: basis.nt(),
            x_triple,
            psi_t0,
            time_drift: drift,
            x_laplacian: lap,
        })
    }

    pub fn modes(&self) -> usize {
        self.n1 * self.nt
    }

    /// `F_m(v) = Σ B[m][n][n'] v_n v_n' + Σ L[m][n'] v_n'`, evaluated through the
    /// separable factors in `O(N1² |N|)` instead of `O(|N|³)`.
    pub fn eval_f(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        let (n1, nt) = (self.n1, self.nt);
        let mut a = vec![0.0; n1];
        for (i, ai) in a.iter_mut().enumerate() {
            *ai = (0..nt).map(|k| v[i * nt + k] * self.psi_t0[k]).sum();
        }
        let mut out = Array1::zeros(n1 * nt);
        for m1 in 0..n1 {
            for np1 in 0..n1 {
                let w: f64 = (0..n1).map(|na| self.x_triple[[na, np1, m1]] * a[na]).sum::<f64>() / self.p_value;
                if w == 0.0 {
                    continue;
                }
                for mt in 0..nt {
                    out[m1 * nt + mt] += w * v[np1 * nt + mt];
                }
            }
        }
        out + self.l.dot(&v)
    }

    /// `F` from the dense tensor, for cross-checking [`Self::eval_f`].
    pub fn eval_f_dense(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        let nm = self.modes();
        let mut out = Array1::zeros(nm);
        for m in 0..nm {
            let mut s = 0.0;
            for n in 0..nm {
                if v[n] == 0.0 {
                    continue;
                }
                for np in 0..nm {
                    s += self.b[[m, n, np]] * v[n] * v[np];
                }
            }
            out[m] = s;
        }
        out + self.l.dot(&v)
    }

    /// `F(v(z_i))` at every node, indexed `[m, i]`.
    pub fn eval_f_profile(&self, profile: &ModeProfile) -> Array2<f64> {
        let mut out = Array2::zeros(profile.values.dim());
        let cols: Vec<Array1<f64>> = (0..profile.nz()).into_par_iter().map(|i| self.eval_f(profile.values.column(i))).collect();
        for (i, c) in cols.into_iter().enumerate() {
            out.column_mut(i).assign(&c);
        }
        out
    }
}

pub fn eval_f(ops: &GalerkinOperators, v: ArrayView1<'_, f64>) -> Array1<f64> {
    ops.eval_f(v)
}

/// `D₂v + S v + F_source` at interior nodes; endpoint columns are left zero.
pub fn residual(ops: &GalerkinOperators, profile: &ModeProfile, f_source: &Array2<f64>) -> Array2<f64> {
    let nz = profile.nz();
    let h2 = profile.h() * profile.h();
    let v = &profile.values;
    assert_eq!(f_source.dim(), v.dim(), "F_source must be sampled on the profile grid");
    let sv = ops.s.dot(v);
    let mut r = Array2::zeros(v.dim());
    for i in 1..nz - 1 {
        for m in 0..v.nrows() {
            r[[m, i]] = (v[[m, i - 1]] - 2.0 * v[[m, i]] + v[[m, i + 1]]) / h2 + sv[[m, i]] + f_source[[m, i]];
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    #[test]
    fn s_vanishes_off_both_diagonals() {
        let tb = TensorBasis::new(1.0, 0.5, 4, 3).unwrap();
        let s = assemble_s(&tb);
        for m in 0..12 {
            for n in 0..12 {
                let (a, b) = (tb.index_of_flat(m), tb.index_of_flat(n));
                if a.n1 != b.n1 && a.nt != b.nt {
                    assert_eq!(s[[m, n]], 0.0);
                }
            }
        }
    }

    #[test]
    fn first_x_mode_laplacian_is_one() {
        let tb = TensorBasis::new(1.0, 0.5, 5, 3).unwrap();
        let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
        assert!((ops.x_laplacian[[0, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_and_dense_f_agree() {
        let tb = TensorBasis::new(1.0, 0.5, 4, 3).unwrap();
        let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
        let v = Array1::from_iter((0..12).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.3));
        let a = ops.eval_f(v.view());
        let b = ops.eval_f_dense(v.view());
        for k in 0..12 {
            assert!((a[k] - b[k]).abs() < 1e-12 * (1.0 + b[k].abs()));
        }
    }

    #[test]
    fn nonpositive_p_rejected() {
        let tb = TensorBasis::new(1.0, 0.5, 2, 2).unwrap();
        assert!(matches!(GalerkinOperators::new(&tb, 0.0), Err(Error::InvalidInitialCondition(_))));
    }

    #[test]
    fn stencil_exact_on_quadratic() {
        let tb = TensorBasis::new(1.0, 0.5, 1, 1).unwrap();
        let mut ops = GalerkinOperators::new(&tb, 2.0).unwrap();
        ops.s.fill(0.0);
        let z = uniform_zgrid(1.0, 11).unwrap();
        let values = Array2::from_shape_fn((1, 11), |(_, i)| z[i] * z[i]);
        let prof = ModeProfile { zgrid: z, values };
        let r = residual(&ops, &prof, &Array2::zeros((1, 11)));
        for i in 1..10 {
            assert!((r[[0, i]] - 2.0).abs() < 1e-10);
        }
    }
}
