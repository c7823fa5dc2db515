//! Recovery of `c = v(·, 0)/p` from a mode profile and comparison with the true phantom.

use ndarray::Array2;
use serde::Serialize;

use crate::basis::TensorBasis;
use crate::galerkin::ModeProfile;
use crate::phantoms::Inclusion;

/// Values on `x × z`, indexed `[i_x, j_z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub values: Array2<f64>,
}

/// `v(x_i, z_j, t) = Σ v_n(z_j) Ψ_{n1}(x_i) ψ_{nt}(t)`, indexed `[i_x, j_z]`.
pub fn synthesize_v(profile: &ModeProfile, basis: &TensorBasis, xs: &[f64], t: f64) -> Array2<f64> {
    let (n1, nt) = (basis.n1(), basis.nt());
    assert_eq!(profile.modes(), n1 * nt, "profile does not match the basis");
    let psi_t: Vec<f64> = basis.t.eval_all(t).iter().map(|d| d[0]).collect();
    // collapse the time factor first: a[n1][j] = Σ_nt v_(n1,nt)(z_j) ψ_nt(t)
    let nz = profile.nz();
    let mut a = Array2::<f64>::zeros((n1, nz));
    for k1 in 0..n1 {
        for kt in 0..nt {
            let row = profile.values.row(k1 * nt + kt);
            a.row_mut(k1).scaled_add(psi_t[kt], &row);
        }
    }
    let mut px = Array2::<f64>::zeros((xs.len(), n1));
    for (i, &x) in xs.iter().enumerate() {
        for (k, v) in basis.x.eval_all(x).into_iter().enumerate() {
            px[[i, k]] = v[0];
        }
    }
    px.dot(&a)
}

pub fn reconstruct_c(profile: &ModeProfile, basis: &TensorBasis, p_value: f64, xs: &[f64]) -> CoefficientField {
    let t0 = basis.t.interval().lo;
    let v0 = synthesize_v(profile, basis, xs, t0);
    CoefficientField { x: xs.to_vec(), z: profile.zgrid.clone(), values: v0 / p_value }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub max_in_inclusion: Vec<f64>,
    pub relative_max_error: Vec<f64>,
    /// Mean of the computed coefficient over each inclusion.
    pub mean_in_inclusion: Vec<f64>,
    pub l2_relative_error: f64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
}

/// Per-inclusion maxima and the global relative L² error.
///
/// When `c_true ≡ 0` the L² error is reported in absolute terms.
pub fn metrics(c_comp: &CoefficientField, c_true: &CoefficientField, inclusions: &[Inclusion], iterations: usize, wall_time_seconds: f64) -> ReconstructionReport {
    assert_eq!(c_comp.values.dim(), c_true.values.dim(), "fields must share the grid");
    let mut max_in = Vec::new();
    let mut rel = Vec::new();
    let mut mean = Vec::new();
    for inc in inclusions {
        let mask = inc.mask(&c_comp.x, &c_comp.z);
        let mut mc = f64::NEG_INFINITY;
        let mut mt = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&m, (&a, &b)) in mask.iter().zip(c_comp.values.iter().zip(c_true.values.iter())) {
            if m {
                mc = mc.max(a);
                mt = mt.max(b);
                sum += a;
                count += 1;
            }
        }
        if count == 0 {
            max_in.push(f64::NAN);
            rel.push(f64::NAN);
            mean.push(f64::NAN);
            continue;
        }
        max_in.push(mc);
        rel.push((mc - mt).abs() / mt.abs());
        mean.push(sum / count as f64);
    }
    let diff: f64 = c_comp.values.iter().zip(c_true.values.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = c_true.values.iter().map(|b| b * b).sum::<f64>().sqrt();
    let l2 = if norm > 0.0 { diff / norm } else { diff };
    ReconstructionReport { max_in_inclusion: max_in, relative_max_error: rel, mean_in_inclusion: mean, l2_relative_error: l2, iterations, wall_time_seconds }
}
