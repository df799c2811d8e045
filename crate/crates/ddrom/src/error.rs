use thiserror::Error;

#[derive(Debug, Error)]
pub enum DdromError {
    /// The parameterized system matrix is singular or its inverse exceeds the
    /// feasibility cap at this parameter value.
    #[error("reduced system infeasible at mu = {mu}: {reason}")]
    Infeasible { mu: f64, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid training set: {0}")]
    Training(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DdromError>;
