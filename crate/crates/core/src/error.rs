use thiserror::Error;

/// Errors raised by the machine model and the algorithms built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("observability order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("{len} items exceed the comparator arity {k}")]
    ArityExceeded { len: usize, k: usize },

    #[error("input is empty")]
    EmptyInput,

    #[error("item {0} appears in more than one group of the same round")]
    OverlappingGroups(usize),

    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("test configuration needs zero invocations; ratio undefined")]
    ZeroCost,

    #[error("non-physical parameter: {0}")]
    NonPhysical(String),

    #[error("invalid energy schedule: {0}")]
    InvalidSchedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
