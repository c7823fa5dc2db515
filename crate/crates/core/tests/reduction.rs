use cip_core::basis::{Deriv, TensorBasis};
use cip_core::forward::{BoundaryRecord, Side};
use cip_core::quadrature::trapezoid_weights;
use cip_core::reduction::{build_cauchy_data, sample_mode, CutoffSpec, Projector};
use ndarray::Array2;
use proptest::prelude::*;

fn uniform(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn native_grid() -> (Vec<f64>, Vec<f64>) {
    (uniform(81, -1.0, 1.0), uniform(401, 0.0, 0.5))
}

/// Smooth data `Σ a_k cos(k x + b_k) e^{-k t}`, sampled on `xs × ts`.
fn smooth(a: &[f64], b: &[f64], x: f64, t: f64) -> f64 {
    a.iter().zip(b).enumerate().map(|(k, (ak, bk))| ak * ((k as f64 + 0.5) * x + bk).cos() * (-(k as f64) * t).exp()).sum()
}

fn sample(xs: &[f64], ts: &[f64], f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
    Array2::from_shape_fn((xs.len(), ts.len()), |(i, l)| f(xs[i], ts[l]))
}

/// Trapezoid `L²(Ω'×(0,T))` norm squared on the native grid.
fn weighted_norm2(data: &Array2<f64>) -> f64 {
    let wx = trapezoid_weights(81, 2.0 / 80.0);
    let wt = trapezoid_weights(401, 0.5 / 400.0);
    data.indexed_iter().map(|((i, l), v)| wx[i] * wt[l] * v * v).sum()
}

#[test]
fn single_mode_projects_to_unit_vector() {
    let (xs, ts) = native_grid();
    let tb = TensorBasis::new(1.0, 0.5, 15, 10).unwrap();
    let proj = Projector::new(&tb, &xs, &ts).unwrap();
    let data = sample_mode(&tb, 3, 2, &xs, &ts, false);
    let c = proj.fourier_coeffs(&data);
    let target = tb.index(3, 2).flat;
    for (n, v) in c.iter().enumerate() {
        let want = if n == target { 1.0 } else { 0.0 };
        assert!((v - want).abs() <= 1e-6, "coefficient {n}: {v}");
    }
    assert!(proj.mismatch_sup(&data) <= 1e-6);
}

#[test]
fn zero_data_gives_zero_coefficients() {
    let (xs, ts) = native_grid();
    let tb = TensorBasis::new(1.0, 0.5, 5, 4).unwrap();
    let proj = Projector::new(&tb, &xs, &ts).unwrap();
    assert!(proj.fourier_coeffs(&Array2::zeros((81, 401))).iter().all(|&c| c == 0.0));
}

#[test]
fn spectral_derivative_of_a_mode_is_its_time_derivative() {
    let (xs, ts) = native_grid();
    let tb = TensorBasis::new(1.0, 0.5, 15, 10).unwrap();
    let proj = Projector::new(&tb, &xs, &ts).unwrap();
    for (n1, nt) in [(1, 1), (4, 7), (15, 10)] {
        let d = proj.spectral_time_derivative(&sample_mode(&tb, n1, nt, &xs, &ts, false));
        let want = sample_mode(&tb, n1, nt, &xs, &ts, true);
        let scale = want.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let err = (&d - &want).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(err <= 1e-8 * scale, "mode ({n1},{nt}): {err}");
    }
}

#[test]
fn constant_records_give_zero_cauchy_data() {
    let (xs, ts) = native_grid();
    // constants are not in the span of t^k e^t, so this holds only up to truncation
    let tb = TensorBasis::new(1.0, 0.5, 15, 10).unwrap();
    let proj = Projector::new(&tb, &xs, &ts).unwrap();
    let rec = |side| BoundaryRecord { side, x: xs.clone(), t: ts.clone(), f: Array2::from_elem((81, 401), 2.0), g: Array2::zeros((81, 401)) };
    let cd = build_cauchy_data(&rec(Side::Top), &rec(Side::Bottom), &proj).unwrap();
    for v in [&cd.p_plus, &cd.p_minus, &cd.q_plus, &cd.q_minus] {
        assert!(v.iter().all(|c| c.abs() <= 1e-10), "{v}");
    }
}

#[test]
fn cutoff_caps_are_enforced() {
    assert!(CutoffSpec::new(0, 3).is_err());
    assert!(CutoffSpec::new(21, 3).is_err());
    assert_eq!(CutoffSpec::new(15, 10).unwrap().modes(), 150);
}

#[test]
fn too_coarse_grid_is_rejected() {
    let tb = TensorBasis::new(1.0, 0.5, 15, 10).unwrap();
    assert!(Projector::new(&tb, &uniform(9, -1.0, 1.0), &uniform(401, 0.0, 0.5)).is_err());
}

fn coeff_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0f64..1.0, 4), prop::collection::vec(0.0f64..3.0, 4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent((a, b) in coeff_strategy(), n1 in 2usize..=15, nt in 2usize..=10) {
        let (xs, ts) = native_grid();
        let tb = TensorBasis::new(1.0, 0.5, n1, nt).unwrap();
        let proj = Projector::new(&tb, &xs, &ts).unwrap();
        let c = proj.fourier_coeffs(&sample(&xs, &ts, |x, t| smooth(&a, &b, x, t)));
        let c2 = proj.fourier_coeffs(&proj.reconstruct(&c));
        for (u, v) in c.iter().zip(c2.iter()) {
            prop_assert!((u - v).abs() <= 1e-10);
        }
    }

    // Σ c_n² is the continuous norm of the fit; the quadrature norm is the one
    // the least-squares projection cannot increase
    #[test]
    fn projection_obeys_bessel((a, b) in coeff_strategy(), n1 in 2usize..=15, nt in 2usize..=10) {
        let (xs, ts) = native_grid();
        let tb = TensorBasis::new(1.0, 0.5, n1, nt).unwrap();
        let proj = Projector::new(&tb, &xs, &ts).unwrap();
        let data = sample(&xs, &ts, |x, t| smooth(&a, &b, x, t));
        let fit = proj.reconstruct(&proj.fourier_coeffs(&data));
        let (energy, norm2) = (weighted_norm2(&fit), weighted_norm2(&data));
        prop_assert!(energy <= norm2 * (1.0 + 1e-12), "{} > {}", energy, norm2);
    }

    // the sup of a least-squares residual need not shrink (e.g. 7.9e-2 -> 8.3e-2
    // for some data at N1 = 4, Nt 3 -> 4); its quadrature L² norm must
    #[test]
    fn residual_does_not_grow_with_cutoff((a, b) in coeff_strategy(), n1 in 2usize..=14, nt in 2usize..=9) {
        let (xs, ts) = native_grid();
        let data = sample(&xs, &ts, |x, t| smooth(&a, &b, x, t));
        let res = |p: usize, q: usize| {
            let tb = TensorBasis::new(1.0, 0.5, p, q).unwrap();
            let proj = Projector::new(&tb, &xs, &ts).unwrap();
            weighted_norm2(&(&data - &proj.reconstruct(&proj.fourier_coeffs(&data))))
        };
        let base = res(n1, nt);
        prop_assert!(res(n1 + 1, nt) <= base * (1.0 + 1e-9) + 1e-20);
        prop_assert!(res(n1, nt + 1) <= base * (1.0 + 1e-9) + 1e-20);
    }

    #[test]
    fn projected_time_derivative_matches_analytic(n1 in 1usize..=15, nt in 1usize..=10) {
        let (xs, ts) = native_grid();
        let tb = TensorBasis::new(1.0, 0.5, 15, 10).unwrap();
        let proj = Projector::new(&tb, &xs, &ts).unwrap();
        let d = proj.spectral_time_derivative(&sample_mode(&tb, n1, nt, &xs, &ts, false));
        let (i, l) = (40, 200);
        let want = tb.x.eval(n1, xs[i], Deriv::Value) * tb.t.eval(nt, ts[l], Deriv::First);
        prop_assert!((d[[i, l]] - want).abs() <= 1e-8 * want.abs().max(1.0));
    }
}

