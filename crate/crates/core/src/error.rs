use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not SPD: {0}")]
    NotSpd(String),

    #[error("coarse problem too large for direct solver: dimension {dim} exceeds cap {cap}")]
    CoarseTooLarge { dim: usize, cap: usize },

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("power iteration failed: {0}")]
    PowerIteration(String),

    #[error("operator is not self-adjoint: {0}")]
    NotSelfAdjoint(String),

    #[error("V-cycle iteration diverged: {0}")]
    Diverged(String),

    #[error(
        "reference solution stagnated at relative residual {attained:.3e} (target {target:.3e})"
    )]
    Stagnation { attained: f64, target: f64 },

    #[error("{0}")]
    Missing(String),

    #[error("matrix market parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
