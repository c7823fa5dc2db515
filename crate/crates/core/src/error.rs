use std::path::PathBuf;

use thiserror::Error;

use crate::carleman::IterationTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interval must satisfy lo < hi, got ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("basis size must satisfy 1 <= N <= {max}, got {got}")]
    InvalidBasisSize { got: usize, max: usize },

    #[error("Gram matrix is not positive definite (pivot {pivot} at row {row})")]
    NonPositiveDefinite { row: usize, pivot: f64 },

    #[error("stability ratio dt/dx^2 = {ratio} exceeds 0.25")]
    StabilityViolation { ratio: f64 },

    #[error("forward field became non-finite at time layer {layer}")]
    NonFiniteField { layer: usize },

    #[error("z = {z} is not a grid line of the forward grid")]
    GridMismatch { z: f64 },

    #[error("initial condition p must be positive, got {0}")]
    InvalidInitialCondition(f64),

    #[error("banded system is singular or indefinite at row {row} (pivot {pivot})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("Picard iteration did not reach kappa0 within {} iterations", trace.records.len())]
    MaxItersExceeded { trace: IterationTrace },

    #[error("Picard iteration produced non-finite values at iteration {iteration}")]
    Diverged { iteration: usize, trace: IterationTrace },

    #[error("no constant C > 0 satisfies the Carleman inequality on the calibration set ({0})")]
    CalibrationFailed(String),

    #[error("missing artifact {0}")]
    MissingArtifact(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
