use thiserror::Error;

use crate::field::Space;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("index {0} out of range, expected 1..=3")]
    IndexOutOfRange(usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("singular input: {0}")]
    Singular(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is in {found:?} space, expected {expected:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{points} points per axis exceeds the cost guard of {limit}")]
    CostGuard { points: usize, limit: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("potential is not Hermitian (max |Q - Q^H| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),

    #[error("weight domain error: {0}")]
    Domain(String),

    #[error("residual {residual:.4e} exceeds gate {gate:.4e}: not a threshold state")]
    ResidualGate { residual: f64, gate: f64 },

    #[error("decay fit failed: {0}")]
    Fit(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
