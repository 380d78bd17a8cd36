use thiserror::Error;

use crate::coupling::ValidationReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel parameter {name} = {value} must be a positive finite number")]
    NonPositiveParam { name: &'static str, value: f64 },

    #[error("repulsion gain b = {b} does not exceed attraction gain a = {a}; no equilibrium separation exists")]
    NoEquilibrium { a: f64, b: f64 },

    #[error("unknown kernel name {name:?}")]
    UnknownKernel { name: String },

    #[error("non-finite kernel input")]
    NonFiniteInput,

    #[error("repulsion is unbounded at separation {distance:e}")]
    Singularity { distance: f64 },

    #[error("bounded-repulsion check failed: {detail}")]
    UnboundedRepulsion { detail: String },

    #[error("coupling matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("coupling weight w[{i}][{j}] = {value} must be finite and nonnegative")]
    InvalidWeight { i: usize, j: usize, value: f64 },

    #[error("coupling matrix failed validation: {report}")]
    FailedValidation { report: ValidationReport },

    #[error("coupling is not balanced: max out/in weight residual {residual:e}")]
    Unbalanced { residual: f64 },

    #[error("spectral gap too small: second eigenvalue {lambda2:e} below {threshold:e}; coupling graph may be disconnected")]
    DegenerateSpectrum { lambda2: f64, threshold: f64 },

    #[error("could not reach edge density {target} after {draws} cycle draws")]
    GenerationFailed { target: f64, draws: usize },

    #[error("{context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid {what}: {detail}")]
    InvalidArgument { what: &'static str, detail: String },

    #[error("integration diverged at t = {time}: {detail}")]
    Divergence { time: f64, detail: String },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
