use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("item id {id} out of range for dataset of {len} items")]
    InvalidId { id: usize, len: usize },

    #[error("item id {0} appears more than once")]
    DuplicateId(usize),

    #[error("item {0} is already part of the selection")]
    AlreadySelected(usize),

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A technical assumption required by an approximation guarantee is not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dataset has no relevance labels")]
    MissingLabels,

    #[error("exhaustive search over {count} subsets exceeds the cap of {cap}; shrink the instance or k")]
    TooManySubsets { count: u128, cap: u128 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
