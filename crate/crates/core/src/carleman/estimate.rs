//! Numerical check of the one-dimensional Carleman estimate
//!
//! ```text
//! ∫ W |w''|² ≥ -C W(R)(λ³|w(R)|² + λ|w'(R)|²) - C W(-R)(λ³|w(-R)|² + λ|w'(-R)|²)
//!              + C λ³ ∫ W |w|² + C λ ∫ W |w'|²,      W = e^{2λ(z - z0)^{-2}}
//! ```

use std::fmt;
use std::sync::Arc;

use super::weight_raw;
use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// A `C²` function with analytic `[w, w', w'']`.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    f: Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish()
    }
}

impl TestFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        TestFunction { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, z: f64) -> [f64; 3] {
        (self.f)(z)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| [c, 0.0, 0.0])
    }

    pub fn monomial(k: i32) -> Self {
        let kf = k as f64;
        Self::new(format!("z^{k}"), move |z| {
            let d1 = if k >= 1 { kf * z.powi(k - 1) } else { 0.0 };
            let d2 = if k >= 2 { kf * (kf - 1.0) * z.powi(k - 2) } else { 0.0 };
            [z.powi(k), d1, d2]
        })
    }

    /// `sin(kπz)`.
    pub fn sine(k: u32) -> Self {
        let w = k as f64 * std::f64::consts::PI;
        Self::new(format!("sin({k}pi z)"), move |z| [(w * z).sin(), w * (w * z).cos(), -w * w * (w * z).sin()])
    }

    pub fn exponential() -> Self {
        Self::new("e^z", |z| {
            let e = z.exp();
            [e, e, e]
        })
    }
}

/// The calibration family `{1, z, z², sin(kπz), k = 1..3}`.
pub fn calibration_family() -> Vec<TestFunction> {
    vec![
        TestFunction::constant(1.0),
        TestFunction::monomial(1),
        TestFunction::monomial(2),
        TestFunction::sine(1),
        TestFunction::sine(2),
        TestFunction::sine(3),
    ]
}

/// The held-out family `{z³, sin(4πz), sin(5πz), e^z}`.
pub fn held_out_family() -> Vec<TestFunction> {
    vec![TestFunction::monomial(3), TestFunction::sine(4), TestFunction::sine(5), TestFunction::exponential()]
}

/// Integrals entering the estimate for one `(w, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateTerms {
    /// `∫ W |w''|²`
    pub lhs: f64,
    /// `W(R)(λ³|w(R)|² + λ|w'(R)|²) + W(-R)(λ³|w(-R)|² + λ|w'(-R)|²)`
    pub boundary: f64,
    /// `λ³ ∫ W |w|²`
    pub interior_value: f64,
    /// `λ ∫ W |w'|²`
    pub interior_grad: f64,
}

impl EstimateTerms {
    /// The bracket multiplied by `C` on the right-hand side.
    pub fn rhs_group(&self) -> f64 {
        self.interior_value + self.interior_grad - self.boundary
    }

    pub fn holds_with(&self, c: f64) -> bool {
        let g = self.rhs_group();
        g <= 0.0 || self.lhs >= c * g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSetup {
    pub r: f64,
    pub z0: f64,
    pub panels: usize,
}

impl Default for EstimateSetup {
    fn default() -> Self {
        EstimateSetup { r: 1.0, z0: -10.0, panels: 10_000 }
    }
}

pub fn estimate_terms(w: &TestFunction, lambda: f64, setup: &EstimateSetup) -> EstimateTerms {
    let (r, z0, n) = (setup.r, setup.z0, setup.panels);
    let wt = |z: f64| weight_raw(z, lambda, z0);
    let lhs = simpson(|z| wt(z) * w.eval(z)[2].powi(2), -r, r, n);
    let i0 = simpson(|z| wt(z) * w.eval(z)[0].powi(2), -r, r, n);
    let i1 = simpson(|z| wt(z) * w.eval(z)[1].powi(2), -r, r, n);
    let l3 = lambda.powi(3);
    let side = |z: f64| {
        let v = w.eval(z);
        wt(z) * (l3 * v[0] * v[0] + lambda * v[1] * v[1])
    };
    EstimateTerms { lhs, boundary: side(r) + side(-r), interior_value: l3 * i0, interior_grad: lambda * i1 }
}

/// Largest `C` for which the estimate holds on every function at `lambda`.
///
/// Functions whose right-hand bracket is non-positive do not constrain `C`;
/// if none constrains it the result is `+∞`.
pub fn calibrate(functions: &[TestFunction], lambda: f64, setup: &EstimateSetup) -> Result<f64> {
    let mut c_star = f64::INFINITY;
    for w in functions {
        let t = estimate_terms(w, lambda, setup);
        let g = t.rhs_group();
        if g > 0.0 {
            let c = t.lhs / g;
            if !(c > 0.0) {
                return Err(Error::CalibrationFailed(format!("{} at lambda = {lambda} gives ratio {c}", w.name)));
            }
            c_star = c_star.min(c);
        }
    }
    Ok(c_star)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCheck {
    pub function: String,
    pub lambda: f64,
    pub terms: EstimateTerms,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanReport {
    pub c_star: f64,
    pub calibration_lambda: f64,
    pub checks: Vec<EstimateCheck>,
}

impl CarlemanReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> Vec<&EstimateCheck> {
        self.checks.iter().filter(|c| !c.holds).collect()
    }
}

/// Calibrates `C*` at `calibration_lambda`, then checks every held-out function at every `λ`.
pub fn verify_carleman_estimate(
    calibration: &[TestFunction],
    held_out: &[TestFunction],
    lambdas: &[f64],
    calibration_lambda: f64,
    setup: &EstimateSetup,
) -> Result<CarlemanReport> {
    let c_star = calibrate(calibration, calibration_lambda, setup)?;
    let mut checks = Vec::new();
    for w in held_out {
        for &lambda in lambdas {
            let terms = estimate_terms(w, lambda, setup);
            checks.push(EstimateCheck { function: w.name.clone(), lambda, terms, holds: terms.holds_with(c_star) });
        }
    }
    Ok(CarlemanReport { c_star, calibration_lambda, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function_never_constrains() {
        let t = estimate_terms(&TestFunction::constant(1.0), 10.0, &EstimateSetup::default());
        assert_eq!(t.lhs, 0.0);
        assert!(t.rhs_group() < 0.0);
    }

    #[test]
    fn lambda_cubed_term_outgrows_gradient_term() {
        let s = EstimateSetup::default();
        let w = TestFunction::sine(2);
        let a = estimate_terms(&w, 20.0, &s);
        let b = estimate_terms(&w, 40.0, &s);
        assert!(b.interior_value / a.interior_value > b.interior_grad / a.interior_grad);
    }

    #[test]
    fn calibration_is_positive() {
        let c = calibrate(&calibration_family(), 10.0, &EstimateSetup::default()).unwrap();
        assert!(c > 0.0 && c.is_finite());
    }
}
