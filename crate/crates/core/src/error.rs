use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("insufficient rows: need at least {needed}, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    /// Regressor block is rank deficient; `columns` names the columns that
    /// are linearly dependent on the others.
    #[error("degenerate design: columns [{}] are linearly dependent on the other regressors", columns.join(", "))]
    DegenerateDesign { columns: Vec<String> },

    /// Input series has zero variance, so a correlation is undefined.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-stationary model: {0}")]
    NonStationary(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("cannot shock control `{0}`: controls do not feed into later periods")]
    ShockedControl(String),

    #[error("unknown preset `{0}` (expected one of: small-rbc-like, medium-nk-like)")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the supplied data rather than by how the tool was invoked.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownVariable(_)
                | Error::InsufficientRows { .. }
                | Error::DegenerateDesign { .. }
                | Error::DegenerateInput(_)
                | Error::NonFinite(_)
                | Error::Parse(_)
                | Error::Csv(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
