use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("invalid dimensions: {0}")]
    Dims(String),
    #[error("label vector is not one-hot: {0}")]
    NotOneHot(String),
    #[error("hidden configuration must be binary (0/1), found {0}")]
    NonBinary(f64),
    #[error("history window has {got} frames, model expects {expected}")]
    HistoryLength { expected: usize, got: usize },
    #[error("model too large for exhaustive enumeration: {0}")]
    TooLarge(String),
    #[error("unsupported for this model: {0}")]
    Unsupported(String),
    #[error("missing labels: {0}")]
    MissingLabels(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("clamp mask and observed data disagree: {0}")]
    Mask(String),
    #[error("zero-norm ground truth in generation error")]
    ZeroNorm,
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("dimension mismatch in record {record} (line {line}): expected {expected} values, found {found}")]
    RecordDim {
        record: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            what,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

/// `read_to_string` with the path in the error message.
pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
