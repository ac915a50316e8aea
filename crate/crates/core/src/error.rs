use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid simplex point: {0}")]
    InvalidSimplex(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("path touches the simplex boundary; the action and its gradient are infinite")]
    BoundaryTouched,

    #[error(
        "optimizer exhausted its budget without converging \
         (best value {best_value}, gradient norm {grad_norm})"
    )]
    OptimizerStalled { best_value: f64, grad_norm: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}
