use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemgenError {
    #[error("invalid environment spec: {reason}")]
    InvalidEnvSpec { reason: String },
    #[error("degenerate regression case {case}: {reason}")]
    DegenerateCase { case: u8, reason: String },
    #[error("mixing input must have exactly 2 columns, got {got}")]
    MixingInputColumns { got: usize },
    #[error("invalid mixing spec: {reason}")]
    InvalidMixingSpec { reason: String },
    #[error("environment list is empty")]
    NoEnvironments,
    #[error("dataset rows disagree: {reason}")]
    RowMismatch { reason: String },
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numkit(#[from] numkit::NumkitError),
}

pub type Result<T> = std::result::Result<T, SemgenError>;
