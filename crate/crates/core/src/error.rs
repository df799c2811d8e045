use socrom_ddrom::DdromError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("nonpositive diffusion coefficient {value} at ({x}, {y})")]
    NonPositiveCoefficient { x: f64, y: f64, value: f64 },

    #[error("singular system at mu = {mu}: {msg}")]
    Singular { mu: f64, msg: String },

    /// The factorization succeeded but the residual check failed.
    #[error("inaccurate solve at mu = {mu}: relative residual {residual:.3e}")]
    Inaccurate { mu: f64, residual: f64 },

    #[error("requested {requested} modes but only {available} singular values exceed the rank threshold")]
    RankDeficient { requested: usize, available: usize },

    #[error("local eigenproblem failed at coarse node {node}: {msg}")]
    Eigen { node: usize, msg: String },

    #[error(transparent)]
    Ddrom(#[from] DdromError),
}

pub type Result<T> = std::result::Result<T, CoreError>;
