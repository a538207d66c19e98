use std::fmt;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("state error: {0}")]
    State(String),

    #[error("unknown constellation `{0}`")]
    UnknownConstellation(String),

    #[error("bin {bin}: {source}")]
    Bin {
        bin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidArgument(msg.to_string())
    }

    pub(crate) fn at_bin(self, bin: usize) -> Self {
        Error::Bin {
            bin,
            source: Box::new(self),
        }
    }

    /// Strips any bin annotations and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Bin { source, .. } => source.root(),
            other => other,
        }
    }
}
