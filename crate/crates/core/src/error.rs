use crate::ts::MonthStamp;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical layers (series handling, model fitting,
/// stacking and the backtest harness).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series have no month in common")]
    EmptyOverlap,

    #[error("series too short: need {needed} values, have {available}")]
    SeriesTooShort { needed: usize, available: usize },

    #[error("no observation for {0}, the month before the target")]
    MissingHistory(MonthStamp),

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("expected {expected} lagged values, got {got}")]
    LagMismatch { expected: usize, got: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("alignment error: {0}")]
    AlignmentError(String),

    #[error("need at least {needed} rows, have {available}")]
    TooFewRows { needed: usize, available: usize },

    #[error("panel has {available} queries, subsets need {needed}")]
    PanelTooNarrow { needed: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {needed} samples, have {available}")]
    TooFewSamples { needed: usize, available: usize },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("prediction log is empty")]
    EmptyLog,

    #[error("invalid month {year}-{month}")]
    InvalidMonth { year: i32, month: u32 },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
