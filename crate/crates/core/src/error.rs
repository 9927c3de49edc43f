use thiserror::Error;

use crate::quadrature::QuadError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("case mismatch: parameters are in case {actual}, requested {requested}")]
    CaseMismatch { requested: String, actual: String },
    #[error("invalid modulator: {0}")]
    Modulator(String),
    #[error("infinite mass: {0}")]
    InfiniteMass(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("tail criterion violated: box half-width {halfwidth} < {required:.6} needed for D·t = {dt:e}")]
    TailCriterion {
        halfwidth: f64,
        required: f64,
        dt: f64,
    },
    #[error("negative values after heat flow: min {min:e} against max {max:e}")]
    Positivity { min: f64, max: f64 },
    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("iterate monotonicity violated by {excess:e} at sweep {sweep}")]
    Monotonicity { sweep: usize, excess: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
