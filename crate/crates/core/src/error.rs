use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus parameters: {0}")]
    InvalidParams(String),

    #[error("{value} is not coprime to {modulus}")]
    NotCoprime { value: i64, modulus: i64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("period too small: window tail {tail:.3e} relative to peak exceeds 1e-12")]
    PeriodTooSmall { tail: f64 },

    #[error("not a frame (numerically): A = {lower:.3e}, B = {upper:.3e}")]
    NotAFrame { lower: f64, upper: f64 },

    #[error("CG stagnation: relative residual {residual:.3e} after {iterations} iterations")]
    CgStagnation { residual: f64, iterations: usize },

    #[error("not a projection: {0}")]
    NotAProjection(String),

    #[error("not dual: Wexler-Raz residual {0:.3e}")]
    NotDual(f64),

    #[error("Laurent structure unavailable: {0}")]
    LaurentUnavailable(String),

    #[error("inconsistent results: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
