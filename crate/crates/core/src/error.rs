use thiserror::Error;

/// Errors raised across the library. Each variant names the invariant that failed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (anti-Hermitian residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("function evaluated outside its domain at eigenvalue {eigenvalue:.3e}")]
    Domain { eigenvalue: f64 },

    #[error("invalid rank {rank} for dimension {dim}")]
    BadRank { rank: usize, dim: usize },

    #[error("skew parameter must lie in (0, 1), got {0}")]
    BadMu(f64),

    #[error("distribution sizes do not match")]
    SizeMismatch,

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid stochastic map: {0}")]
    InvalidStochasticMap(String),

    #[error("ensemble weights do not form a distribution: {0}")]
    Weight(String),

    #[error("states do not commute (commutator norm {norm:.3e})")]
    NotCommuting { norm: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("vectors are not orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("Kraus family is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error("channel output is not a valid state: {0}")]
    OutputInvalid(Box<Error>),

    #[error("Stinespring factorization failed: {0}")]
    FactorizationFailed(String),

    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch { expected: expected.to_string(), found: found.to_string() }
}
