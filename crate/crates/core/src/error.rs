use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input supplied by the caller.
    #[error("argument error: {0}")]
    Argument(String),

    /// A value became NaN or infinite.
    #[error("numerical error in {context}{}", coordinate.map(|c| format!(" (coordinate {c})")).unwrap_or_default())]
    Numerical {
        context: String,
        coordinate: Option<usize>,
    },

    /// A computation would exceed a fixed size budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("optimization failed: {message}")]
    Optimization { message: String, last_iterate: Vec<f64> },

    /// The negative Hessian could not be made positive definite.
    #[error("Hessian is singular even with diagonal ridge {ridge:e}")]
    SingularHessian { ridge: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numerical(context: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            coordinate: None,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical { .. } | Error::Optimization { .. } | Error::SingularHessian { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
