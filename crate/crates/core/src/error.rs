use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree must be at least 3, got {0}")]
    InvalidDegree(u32),

    #[error("label entry {entry} at position {position} is out of range for degree {d}")]
    LabelOutOfRange { position: usize, entry: u32, d: u32 },

    #[error("cannot parse vertex label {0:?}")]
    LabelParse(String),

    #[error("{0}")]
    Domain(String),

    #[error("protocol table: {0}")]
    Table(String),

    #[error("time {t} is beyond the protocol horizon {horizon}")]
    HorizonExceeded { t: u32, horizon: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u32, found: u32 },

    #[error("enumeration budget exceeded: {needed} outcomes, cap {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
