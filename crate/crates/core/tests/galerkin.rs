use cip_core::basis::{Deriv, TensorBasis};
use cip_core::galerkin::{residual, uniform_zgrid, GalerkinOperators, ModeProfile};
use cip_core::quadrature::{simpson, trapezoid_weights};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

/// `(1/p) ∫∫ P_n(x,0) P_n'(x,t) P_m(x,t)` by an `n × n` trapezoid rule.
fn brute_force_b(tb: &TensorBasis, p: f64, n: usize) -> Vec<f64> {
    let (nx, nt) = (n, n);
    let xs: Vec<f64> = (0..nx).map(|i| -1.0 + 2.0 * i as f64 / (nx - 1) as f64).collect();
    let ts: Vec<f64> = (0..nt).map(|l| 0.5 * l as f64 / (nt - 1) as f64).collect();
    let (wx, wt) = (trapezoid_weights(nx, 2.0 / (nx - 1) as f64), trapezoid_weights(nt, 0.5 / (nt - 1) as f64));
    let nm = tb.len();
    let modes: Vec<_> = (0..nm).map(|k| tb.index_of_flat(k)).collect();
    let px = |n: usize, x: f64| tb.x.eval(modes[n].n1, x, Deriv::Value);
    let pt = |n: usize, t: f64| tb.t.eval(modes[n].nt, t, Deriv::Value);
    let mut b = vec![0.0; nm * nm * nm];
    for (i, &x) in xs.iter().enumerate() {
        for (l, &t) in ts.iter().enumerate() {
            let w = wx[i] * wt[l] / p;
            let at0: Vec<f64> = (0..nm).map(|n| px(n, x) * pt(n, 0.0)).collect();
            let val: Vec<f64> = (0..nm).map(|n| px(n, x) * pt(n, t)).collect();
            for m in 0..nm {
                for n in 0..nm {
                    for np in 0..nm {
                        b[(m * nm + n) * nm + np] += w * at0[n] * val[np] * val[m];
                    }
                }
            }
        }
    }
    b
}

#[test]
fn nonlinearity_tensor_matches_brute_force_quadrature() {
    let tb = TensorBasis::new(1.0, 0.5, 4, 3).unwrap();
    let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
    let coarse = brute_force_b(&tb, 2.0, 201);
    let scale = coarse.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let err = ops.b.iter().zip(&coarse).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    // plain 201×201 trapezoid carries an O(h²) error of a few 1e-3
    assert!(err <= 5e-3 * scale, "max deviation {err} vs scale {scale}");
    // Richardson with the 401×401 rule removes the h² term
    let fine = brute_force_b(&tb, 2.0, 401);
    let err = ops.b.iter().zip(coarse.iter().zip(&fine)).fold(0.0_f64, |m, (a, (c, f))| m.max((a - (4.0 * f - c) / 3.0).abs()));
    assert!(err <= 1e-6 * scale, "extrapolated deviation {err}");
}

#[test]
fn s_matches_brute_force_quadrature() {
    let tb = TensorBasis::new(1.0, 0.5, 5, 4).unwrap();
    let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
    for m in 0..tb.len() {
        let im = tb.index_of_flat(m);
        for k in 0..tb.len() {
            let ik = tb.index_of_flat(k);
            let ix = |d: Deriv| simpson(|x| tb.x.eval(ik.n1, x, d) * tb.x.eval(im.n1, x, Deriv::Value), -1.0, 1.0, 4000);
            let it = |d: Deriv| simpson(|t| tb.t.eval(ik.nt, t, d) * tb.t.eval(im.nt, t, Deriv::Value), 0.0, 0.5, 4000);
            // s_mn = ∫∫ (P_n,xx - P_n,t) P_m
            let want = ix(Deriv::Second) * it(Deriv::Value) - ix(Deriv::Value) * it(Deriv::First);
            assert!((ops.s[[m, k]] - want).abs() <= 1e-9 * want.abs().max(1.0), "s[{m},{k}] = {} vs {want}", ops.s[[m, k]]);
        }
    }
}

#[test]
fn residual_stencil_is_exact_on_quadratic_profiles() {
    let tb = TensorBasis::new(1.0, 0.5, 3, 2).unwrap();
    let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
    let z = uniform_zgrid(1.0, 21).unwrap();
    let nm = tb.len();
    let a: Vec<f64> = (0..nm).map(|m| 0.3 * m as f64 - 0.7).collect();
    let values = Array2::from_shape_fn((nm, z.len()), |(m, i)| a[m] * z[i] * z[i] + z[i] - 0.1 * m as f64);
    let prof = ModeProfile { zgrid: z.clone(), values: values.clone() };
    // v'' = 2a exactly, so F_source = -(2a + S v) zeroes the residual
    let sv = ops.s.dot(&values);
    let f = Array2::from_shape_fn((nm, z.len()), |(m, i)| -(2.0 * a[m] + sv[[m, i]]));
    let r = residual(&ops, &prof, &f);
    assert!(r.iter().all(|v| v.abs() <= 1e-9), "{r}");
}

#[test]
fn coarse_z_grids_are_rejected() {
    assert!(uniform_zgrid(1.0, 4).is_err());
    assert_eq!(uniform_zgrid(1.0, 81).unwrap().len(), 81);
}

#[test]
fn non_positive_p_is_rejected() {
    let tb = TensorBasis::new(1.0, 0.5, 2, 2).unwrap();
    assert!(GalerkinOperators::new(&tb, 0.0).is_err());
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nonlinearity_is_quadratic(v in vector(20), alpha in -3.0f64..3.0) {
        let tb = TensorBasis::new(1.0, 0.5, 5, 4).unwrap();
        let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
        let v = Array1::from(v);
        let f1 = ops.eval_f(v.view());
        let f2 = ops.eval_f((&v * alpha).view());
        for (a, b) in f1.iter().zip(f2.iter()) {
            prop_assert!((alpha * alpha * a - b).abs() <= 1e-11 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn separable_evaluation_matches_dense_tensor(v in vector(20)) {
        let tb = TensorBasis::new(1.0, 0.5, 5, 4).unwrap();
        let ops = GalerkinOperators::new(&tb, 2.0).unwrap();
        let v = Array1::from(v);
        let fast = ops.eval_f(v.view());
        let dense = ops.eval_f_dense(v.view());
        for (a, b) in fast.iter().zip(dense.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn nonlinearity_scales_inversely_with_p(v in vector(12), p in 0.5f64..4.0) {
        let tb = TensorBasis::new(1.0, 0.5, 4, 3).unwrap();
        let a = GalerkinOperators::new(&tb, 1.0).unwrap();
        let b = GalerkinOperators::new(&tb, p).unwrap();
        let v = Array1::from(v);
        for (x, y) in a.eval_f(v.view()).iter().zip(b.eval_f(v.view()).iter()) {
            prop_assert!((x / p - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}
