use thiserror::Error;

/// Errors produced anywhere in the forecasting toolkit.
#[derive(Debug, Error)]
pub enum WdanError {
    #[error("unsupported wavelet `{0}`")]
    UnsupportedWavelet(String),
    #[error("wavelet `{name}` failed validation: {reason}")]
    InvalidBasis { name: String, reason: String },
    #[error("signal of length {len} is too short for a wavelet step (need at least 2)")]
    SignalTooShort { len: usize },
    #[error("decomposition depth must be at least 1")]
    InvalidLevels,
    #[error("{levels} levels is too deep for a signal of length {len}")]
    TooManyLevels { levels: usize, len: usize },
    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("window of length {len} is too short (need at least {required})")]
    WindowTooShort { len: usize, required: usize },
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("activation tape does not match the network it is replayed against")]
    TapeMismatch,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("no data: {0}")]
    NoData(String),
    #[error("invalid training strategy `{0}`")]
    InvalidStrategy(String),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("variable `{name}` has zero variance on the training split")]
    DegenerateVariable { name: String },
    #[error("series of length {len} is too short (need at least {required})")]
    SeriesTooShort { len: usize, required: usize },
    #[error("singular regression design matrix")]
    SingularRegression,
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("numerical failure: {0}")]
    NumericFailure(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl WdanError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        WdanError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        WdanError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, WdanError>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(WdanError::LengthMismatch {
            context,
            expected,
            actual,
        })
    }
}
