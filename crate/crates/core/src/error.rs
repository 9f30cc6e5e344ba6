use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("separation needs at least two components")]
    NoPairs,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("pruning starved below k: {survivors} centers survived, {k} required")]
    PruningStarved { survivors: usize, k: usize },
    #[error("data set carries no labels")]
    Unlabeled,
    #[error("internal error: {0}")]
    Internal(String),
}
