use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate publication id `{0}`")]
    DuplicateId(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("graph has no edges ({0})")]
    EmptyGraph(String),

    #[error("measure undefined: {0}")]
    UndefinedMeasure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by the caller's input rather than by the tool.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
