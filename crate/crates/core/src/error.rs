use thiserror::Error;

use crate::decomposition::SparseDecomposition;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vector must have unit norm, got ‖x‖₂ = {norm}")]
    NotUnitNorm { norm: f64 },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eig:e}, maximum {max_eig:e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("matrix is not symmetric at ({row}, {col}): difference {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("exhaustive search over n = {n} variables exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error(
        "no penalty in [{rho_lo:e}, {rho_hi:e}] meets the l1 budget {k}: \
         l1 mass at the largest penalty was {mass_at_rho_hi}"
    )]
    NoFeasiblePenalty {
        k: usize,
        rho_lo: f64,
        rho_hi: f64,
        mass_at_rho_hi: f64,
    },

    #[error("component {component} failed: {source}")]
    Decomposition {
        component: usize,
        partial: Box<SparseDecomposition>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
