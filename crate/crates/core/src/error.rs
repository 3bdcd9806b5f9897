use thiserror::Error;

/// Errors raised by solvers, oracles and the game engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("representation is numerically singular: cond(R^T Sigma_x R) = {cond:.3e}")]
    SingularRepresentation { cond: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is ill-conditioned: cond = {cond:.3e}")]
    IllConditioned { cond: f64 },

    #[error("matrix is not symmetric: |A[{i}][{j}] - A[{j}][{i}]| = {gap:.3e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("matrix is not positive (semi)definite: lambda_min = {lambda_min:.3e}")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("marginal decomposition failed: residual {residual:.3e}")]
    DecompositionFailure { residual: f64 },

    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("representation has zero norm")]
    ZeroRepresentation,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
