use std::path::PathBuf;

/// Errors produced anywhere in the library.
///
/// The CLI maps [`Error::Io`] to exit status 2 and everything else to 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("no valid entity records found in {0}")]
    EmptyIndex(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::EmptyIndex(_) => "empty_index",
            Error::Shape(_) => "shape",
            Error::Format { .. } => "format",
            Error::Json { .. } => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
