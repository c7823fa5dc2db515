//! True coefficients for the benchmark tests.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

/// Axis-aligned rectangle `[x0, x1] × [z0, z1]`, open in both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, z0: f64, z1: f64) -> Self {
        Rect { x0, x1, z0, z1 }
    }

    fn contains(&self, x: f64, z: f64) -> bool {
        x > self.x0 && x < self.x1 && z > self.z0 && z < self.z1
    }
}

pub const LETTER_T_BAR: Rect = Rect::new(-0.5, 0.5, 0.4, 0.7);
pub const LETTER_T_STEM: Rect = Rect::new(-0.15, 0.15, -0.6, 0.4);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomSpec {
    Zero,
    /// Bump `exp(-r²/(0.55² - r²))`, `r² = 0.35x² + (z - 0.4)²`.
    Ellipse,
    /// Value 1 on `|z ∓ 0.6| < 0.2`.
    TwoBars,
    LetterT { bar: Rect, stem: Rect },
    /// `c0` at every point, including outside Ω. Used only to validate the forward solver.
    Constant(f64),
}

impl PhantomSpec {
    pub fn letter_t() -> Self {
        PhantomSpec::LetterT { bar: LETTER_T_BAR, stem: LETTER_T_STEM }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhantomSpec::Zero => "zero",
            PhantomSpec::Ellipse => "ellipse",
            PhantomSpec::TwoBars => "two-bars",
            PhantomSpec::LetterT { .. } => "letter-t",
            PhantomSpec::Constant(_) => "constant",
        }
    }

    /// One membership test per inclusion, in a fixed order (upper bar first).
    pub fn inclusions(&self) -> Vec<Inclusion> {
        match *self {
            PhantomSpec::Zero | PhantomSpec::Constant(_) => Vec::new(),
            PhantomSpec::Ellipse => vec![Inclusion::Ellipse],
            PhantomSpec::TwoBars => vec![Inclusion::Bar { centre: 0.6 }, Inclusion::Bar { centre: -0.6 }],
            PhantomSpec::LetterT { bar, stem } => vec![Inclusion::LetterT { bar, stem }],
        }
    }
}

impl fmt::Display for PhantomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhantomSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "zero" => Ok(PhantomSpec::Zero),
            "ellipse" => Ok(PhantomSpec::Ellipse),
            "two-bars" | "two_bars" => Ok(PhantomSpec::TwoBars),
            "letter-t" | "letter_t" => Ok(PhantomSpec::letter_t()),
            other => Err(format!("unknown test '{other}' (expected zero|ellipse|two-bars|letter-t)")),
        }
    }
}

/// Analytic support of one inclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inclusion {
    Ellipse,
    Bar { centre: f64 },
    LetterT { bar: Rect, stem: Rect },
}

impl Inclusion {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        if !inside_omega(x, z) {
            return false;
        }
        match *self {
            Inclusion::Ellipse => ellipse_r2(x, z) < ELLIPSE_A2,
            Inclusion::Bar { centre } => 4.0 * (z - centre).abs() < 0.8 && 0.25 * x.abs() < 0.8,
            Inclusion::LetterT { bar, stem } => bar.contains(x, z) || stem.contains(x, z),
        }
    }

    /// Boolean mask on the tensor grid `xs × zs`, indexed `[i_x, j_z]`.
    pub fn mask(&self, xs: &[f64], zs: &[f64]) -> Array2<bool> {
        Array2::from_shape_fn((xs.len(), zs.len()), |(i, j)| self.contains(xs[i], zs[j]))
    }
}

const ELLIPSE_A2: f64 = 0.55 * 0.55;

fn ellipse_r2(x: f64, z: f64) -> f64 {
    0.35 * x * x + (z - 0.4) * (z - 0.4)
}

fn inside_omega(x: f64, z: f64) -> bool {
    x.abs() < 1.0 && z.abs() < 1.0
}

pub fn eval_phantom(spec: &PhantomSpec, x: f64, z: f64) -> f64 {
    match *spec {
        PhantomSpec::Constant(c0) => c0,
        PhantomSpec::Zero => 0.0,
        _ if !inside_omega(x, z) => 0.0,
        PhantomSpec::Ellipse => {
            let r2 = ellipse_r2(x, z);
            if r2 < ELLIPSE_A2 {
                (-r2 / (ELLIPSE_A2 - r2)).exp()
            } else {
                0.0
            }
        }
        PhantomSpec::TwoBars | PhantomSpec::LetterT { .. } => {
            let hit = spec.inclusions().iter().any(|inc| inc.contains(x, z));
            if hit {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Samples the phantom on `xs × zs`, indexed `[i_x, j_z]`.
pub fn sample_phantom(spec: &PhantomSpec, xs: &[f64], zs: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((xs.len(), zs.len()), |(i, j)| eval_phantom(spec, xs[i], zs[j]))
}
