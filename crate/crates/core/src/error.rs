use thiserror::Error;

/// Errors raised by the simulator and the bound calculators.
///
/// Protocol aborts are not errors; they are recorded in the run transcript.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration of {count} strategies exceeds the limit of {limit}")]
    Capacity { count: u128, limit: u128 },

    #[error("malformed strategy: {0}")]
    MalformedStrategy(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("theorem not applicable: epsilon = {epsilon} must be below c_star / 2 = {half_c_star}")]
    TheoremInapplicable { epsilon: f64, half_c_star: f64 },

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("arithmetic overflow in exact computation: {0}")]
    Overflow(String),

    #[error("invalid game document: {0}")]
    GameFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
