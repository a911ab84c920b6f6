use thiserror::Error;

use crate::modes::ModeIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate deformation: |det(I - E B)| = {det:e} is not above tolerance {tolerance:e}")]
    DegenerateDeformation { det: f64, tolerance: f64 },

    #[error("deformation tensor {name} is not antisymmetric (max |M + M^T| = {defect:e})")]
    NotAntisymmetric { name: &'static str, defect: f64 },

    #[error("deformation tensors have shapes {e:?} and {b:?}, expected square {expected}x{expected}")]
    TensorShape {
        e: (usize, usize),
        b: (usize, usize),
        expected: usize,
    },

    #[error("index out of range: {0}")]
    IndexMismatch(String),

    #[error("gradient does not cover the mode set: {0}")]
    ShapeMismatch(String),

    #[error("operands live on different mode sets (n_max {left} vs {right})")]
    ModeSetMismatch { left: u32, right: u32 },

    #[error("no real dressing solution: 1 + theta*theta_bar = {value:e} is not above tolerance {tolerance:e}")]
    NoRealSolution { value: f64, tolerance: f64 },

    #[error("dressing coefficients violate constraint {index}: residual {residual:e}")]
    ConstraintViolation { index: usize, residual: f64 },

    #[error("mode {n} is singular: Delta_n = {delta:e}")]
    SingularMode { n: ModeIndex, delta: f64 },

    #[error("verification failed for {pair}: residual {residual:e} exceeds {tolerance:e}")]
    VerificationFailure {
        pair: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("negative occupation {value} for branch {branch} of mode {n}")]
    NegativeOccupation { n: ModeIndex, branch: u8, value: i64 },

    #[error("time step {dt:e} too large: must be below 2 pi / max frequency = {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),

    #[error("reality pairing violated at {coordinate}: deviation {deviation:e}")]
    RealityViolation { coordinate: String, deviation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
