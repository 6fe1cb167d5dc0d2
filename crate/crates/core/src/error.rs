use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("invalid subsystem layout: {0}")]
    InvalidLayout(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid Schmidt spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("ensemble size {n} outside [{min}, {max}]")]
    EnsembleSize { n: usize, min: usize, max: usize },

    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    #[error("certificate is not dual feasible: {0}")]
    InfeasibleCertificate(String),

    /// An internal consistency check failed; indicates a bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
