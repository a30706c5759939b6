use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit codes: validation problems exit with 2,
/// resolution problems with 3, numerical failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A grid is too coarse for the requested operation.
    #[error("insufficient resolution: {message} (need resolution B >= {required})")]
    Resolution { message: String, required: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn resolution(msg: impl Into<String>, required: usize) -> Self {
        Error::Resolution {
            message: msg.into(),
            required,
        }
    }

    /// Process exit code used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Precondition(_) | Error::Json(_) => 2,
            Error::Resolution { .. } => 3,
            Error::Numerical(_) | Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
