//! Reconstruction of the zero-order coefficient `c(x)` in `u_t = Δu + c u` on a
//! square from Cauchy data on the two sides `z = ±R`.
//!
//! The pipeline: simulate `u` by explicit finite differences, project `u_t` on
//! the sides onto a polynomial-exponential tensor basis in `(x, t)`, solve the
//! resulting system of ODEs in `z` by a Carleman-weighted quasi-reversibility
//! method inside a Picard loop, and read off `c = v(·, 0)/p`.

pub mod banded;
pub mod basis;
pub mod carleman;
pub mod config;
pub mod error;
pub mod forward;
pub mod galerkin;
pub mod phantoms;
pub mod pipeline;
pub mod quadrature;
pub mod reconstruction;
pub mod reduction;

pub use error::{Error, Result};
