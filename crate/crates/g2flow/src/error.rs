use thiserror::Error;

/// Signature of a symmetric bilinear form: counts of positive, negative and
/// (numerically) zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.positive, self.negative, self.zero)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("3-form is not positive (bilinear form signature {signature})")]
    NotPositive { signature: Signature },
    #[error("positivity lost at node {node}: signature {signature}")]
    PositivityLoss { node: usize, signature: Signature },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("operator of dimension {dim} exceeds the dense capacity {cap}")]
    Capacity { dim: usize, cap: usize },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },
    #[error("step size fell below the floor {dt_min:e}")]
    StepFloor { dt_min: f64 },
    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
