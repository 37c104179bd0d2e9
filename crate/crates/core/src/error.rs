use thiserror::Error;

/// Errors produced by the simulation layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e}){context}")]
    NotHermitian { deviation: f64, context: String },

    #[error("spectral norm {norm} exceeds declared bound {bound}")]
    NormBoundViolated { norm: f64, bound: f64 },

    #[error("observable norm {0} exceeds 1")]
    ObservableNorm(f64),

    #[error("integrator needed more than {max_steps} steps to reach tolerance {tol:e}")]
    StepOverflow { max_steps: usize, tol: f64 },

    #[error("oracle integration failed to converge: {0}")]
    OracleDiverged(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("desk-scale limit exceeded: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
