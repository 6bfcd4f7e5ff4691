use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid spacing mismatch: {left} vs {right}")]
    SpacingMismatch { left: f64, right: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("kernel unresolved: {cells} samples across the support, at least 9 required")]
    UnresolvedKernel { cells: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical abort at t = {time}, cell {cell}: {reason}")]
    NumericalAbort { time: f64, cell: usize, reason: String },

    #[error("tail budget exceeded at t = {time}: {leaked:.3e} leaked, cap {cap:.3e}; widen the domain")]
    TailBudget { time: f64, leaked: f64, cap: f64 },

    #[error("{location}: {message}")]
    Config { location: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code: 2 for usage, configuration and precondition
    /// problems, 3 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalAbort { .. } | Error::TailBudget { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
