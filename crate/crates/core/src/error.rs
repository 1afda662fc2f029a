use thiserror::Error;

/// Errors raised by the constructive operations of this crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("edge set is not the inversion set of any permutation: {0}")]
    NotAnInversionSet(String),

    #[error("not a tree permutation: {0}")]
    NotATree(String),

    #[error("not a forest permutation: {0}")]
    NotAForest(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("series denominator has zero constant term")]
    NotExpandable,

    #[error("renewal stream exhausted before reaching {0}")]
    StreamExhausted(u64),

    #[error("requested precision infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
