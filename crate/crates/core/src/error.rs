use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame {frame}, line {line}: {message}")]
    Parse {
        frame: usize,
        line: usize,
        message: String,
    },

    #[error("structure {id}: {message}")]
    InvalidStructure { id: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element {element} is missing from {context}")]
    MissingElement { element: String, context: String },

    #[error("column layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("spec checksum mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}
