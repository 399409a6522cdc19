use std::io;

use thiserror::Error;

/// Errors produced by the solver and its harness.
#[derive(Debug, Error)]
pub enum TqgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field mismatch: {0}")]
    Mismatch(String),

    #[error("function is not periodic on the unit torus (node at ({x:.6}, {y:.6}) differs by {gap:.3e})")]
    NotPeriodic { x: f64, y: f64, gap: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("elliptic solve failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<TqgError>,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = TqgError> = std::result::Result<T, E>;
