//! Symmetric positive definite band matrices and their Cholesky factorization.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix, row-major: row `i` stores columns `i - bw ..= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Half-bandwidth.
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "({i}, {j}) outside the lower band");
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Entry `(i, j)` of the full symmetric matrix; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds to `(i, j)` with `j <= i`.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn set_lower(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.slot(i, i)]).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[self.slot(i, j0)..=self.slot(i, i)];
            let mut acc = 0.0;
            for (k, &a) in row.iter().enumerate() {
                let j = j0 + k;
                acc += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `D A D = L Lᵀ` with `D = diag(A)^{-1/2}`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedSym,
    scale: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &BandedSym) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let mut scale = Vec::with_capacity(n);
        for (i, d) in a.diagonal().into_iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularSystem { row: i, pivot: d });
            }
            scale.push(1.0 / d.sqrt());
        }
        let mut l = a.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k = l.slot(i, j);
                l.data[k] *= scale[i] * scale[j];
            }
        }
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l.data[i * w + (j + bw - i)];
                if k0 < j {
                    let ri = &l.data[i * w + (k0 + bw - i)..i * w + (j + bw - i)];
                    let rj = &l.data[j * w + (k0 + bw - j)..j * w + bw];
                    s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::SingularSystem { row: i, pivot: s });
                    }
                    l.data[i * w + bw] = s.sqrt();
                } else {
                    l.data[i * w + (j + bw - i)] = s / l.data[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { l, scale })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let bw = self.l.bw;
        let w = bw + 1;
        let d = &self.l.data;
        let mut y: Vec<f64> = b.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let row = &d[i * w + (j0 + bw - i)..i * w + bw];
            let s: f64 = row.iter().zip(&y[j0..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / d[i * w + bw];
        }
        for i in (0..n).rev() {
            y[i] /= d[i * w + bw];
            let yi = y[i];
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                y[j] -= d[i * w + (j + bw - i)] * yi;
            }
        }
        for (v, s) in y.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        y
    }

    /// Solve with iterative refinement against the original matrix.
    pub fn solve_refined(&self, a: &BandedSym, b: &[f64], steps: usize) -> Vec<f64> {
        let mut x = self.solve(b);
        for _ in 0..steps {
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        x
    }
}

pub fn relative_residual(a: &BandedSym, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
