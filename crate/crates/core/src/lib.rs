//! Deterministic round-based simulation of the JADE jamming-resistant MAC
//! protocol on unit disk graphs.
//!
//! The crate is split along the moving parts of the model:
//!
//! - [`topology`] — node placement, unit disk graph construction, disk and
//!   sector geometry;
//! - [`protocol`] — the per-node state machine (send probability, busy
//!   threshold, round counter);
//! - [`adversary`] — jamming strategies, the sliding-window budget enforcer,
//!   and the post-hoc budget auditor;
//! - [`engine`] — the synchronous round loop, counter-based random streams,
//!   and trace recording;
//! - [`metrics`] — interval statistics, competitive throughput, contention
//!   diagnostics, convergence summaries;
//! - [`oracle`] — exact small-instance channel probabilities for validating
//!   the simulator.
//!
//! Every random decision is addressed by `(master seed, purpose, node, round)`,
//! so runs are reproducible bit-for-bit and nodes within a round can be
//! processed in any order — or in parallel via the `parallel` feature —
//! without changing results.

pub mod adversary;
pub mod bits;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod protocol;
pub mod topology;

pub use error::{Error, Result};

/// Node identifier: a dense index into the position and state vectors.
pub type NodeId = u32;

/// Round index within a simulation.
pub type Round = u64;
