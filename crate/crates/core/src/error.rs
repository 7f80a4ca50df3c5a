use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not a correlation matrix: {0}")]
    NotCorrelation(String),
    #[error("finite-difference step left the manifold")]
    StepFailure,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("class {0} is missing")]
    MissingClass(i64),
    #[error("trajectory diverged at step {step}")]
    DivergedTrajectory { step: usize },
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("format error: {0}")]
    FormatError(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("cannot split dataset: {0}")]
    CannotSplit(String),
    #[error("channel {0} is constant")]
    DegenerateChannel(usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
