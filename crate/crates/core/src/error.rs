//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A structured-text input could not be parsed.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    /// Catalog validation failure (duplicate id, dangling reference, ...).
    #[error("catalog: {0}")]
    Catalog(String),

    /// A condition id that does not resolve in the catalog or dataset.
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),

    /// Caller violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Run-configuration problem (bad value, unknown key, missing section).
    #[error("config: {0}")]
    Config(String),

    /// A node regression has no at-risk subjects to fit on.
    #[error("empty at-risk set for condition `{0}`")]
    EmptyAtRisk(String),

    /// BIC is undefined without commonly observed subjects.
    #[error("no observations common to both cross sections")]
    NoCommonObservations,

    /// Two graphs or pools cover different condition vocabularies.
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    /// Adding an edge would create a directed cycle in a DAG.
    #[error("edge {0} -> {1} would create a directed cycle")]
    Cycle(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
