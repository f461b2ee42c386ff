use thiserror::Error;

/// Errors surfaced by the geometry kernel and the verifiers built on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{context}: dimension {dim} must be even")]
    OddDimension { context: &'static str, dim: usize },

    #[error("matrix is not skew-symmetric (‖M + Mᵀ‖_F = {asymmetry:.3e})")]
    NotSkewSymmetric { asymmetry: f64 },

    #[error("matrix is not symplectic (‖ΦᵀJΦ − J‖_F = {residual:.3e} > {tol:.3e})")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("rank-deficient operator: smallest singular value {sigma_min:.3e}")]
    RankDeficient { sigma_min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("nonsqueezing inequality violated: volume ratio {ratio:.17e} < 1 - {tol:.3e}")]
    NonsqueezingViolation { ratio: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
