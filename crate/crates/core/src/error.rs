use std::path::PathBuf;

/// Errors produced anywhere in the retrieval pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty feedback text")]
    EmptyFeedbackText,

    #[error("both the query model and the feedback text are empty")]
    EmptyFeedback,

    #[error("index has no stored document vectors; rebuild it with vectors enabled")]
    MissingDocVectors,

    #[error("subtask `{0}` is missing from the generation bundle")]
    MissingSubtask(String),

    #[error("unknown subtask `{name}`; valid names are: {valid}")]
    UnknownSubtask { name: String, valid: String },

    #[error("no fixture for query `{query_id}` subtask `{subtask}`")]
    FixtureMissing { query_id: String, subtask: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("generation failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },

    #[error("unsupported {kind} format version {found} (expected {expected})")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("{0}")]
    Schema(String),

    #[error("run and qrels share no queries")]
    NoSharedQueries,

    #[error("insufficient queries for a paired test (need at least 2, got {0})")]
    InsufficientQueries(usize),

    #[error("every grid point failed to evaluate")]
    AllGridPointsFailed,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
