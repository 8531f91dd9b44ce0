//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a model precondition. The message names
    /// the offending field.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown node id {0}")]
    UnknownNode(crate::NodeId),

    #[error("node {w} is not a neighbor of node {u}")]
    NotNeighbor { u: crate::NodeId, w: crate::NodeId },

    /// Observations must be applied with strictly increasing round indices.
    #[error("observation for round {got} applied at or before round {last}")]
    OutOfOrderRound { got: crate::Round, last: crate::Round },

    #[error("interval {start}..{end} is outside the trace ({rounds} rounds)")]
    IntervalOutOfRange { start: u64, end: u64, rounds: u64 },

    /// The trace was recorded at a detail level that cannot answer this query.
    #[error("trace detail too low: {0}")]
    InsufficientDetail(&'static str),

    #[error("no state snapshot available: {0}")]
    MissingSnapshot(String),

    /// An operation precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
