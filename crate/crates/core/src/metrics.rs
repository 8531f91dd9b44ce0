//! Measured quantities over finished traces: per-node interval statistics,
//! competitive throughput, disk/sector contention diagnostics, and
//! convergence summaries.
//!
//! Metrics never re-derive channel semantics: counts come from recorded
//! observations (or a replay through the engine's own resolver when only
//! masks were kept), and state-dependent quantities come from snapshots.

use std::ops::Range;

use serde::Serialize;

use crate::engine::{resolve_round_sequential, RoundAggregate, Snapshot, Trace, TraceDetail};
use crate::protocol::Observation;
use crate::{Error, NodeId, Result, Round};

/// Per-node counts over one interval: non-jammed rounds `f_v`, receptions
/// `s_v`, open rounds `o_v`, and jammed rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalStats {
    pub start: Round,
    pub end: Round,
    pub nonjammed: Vec<u64>,
    pub received: Vec<u64>,
    pub open: Vec<u64>,
    pub jammed: Vec<u64>,
}

impl IntervalStats {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn total_nonjammed(&self) -> u64 {
        self.nonjammed.iter().sum()
    }

    pub fn total_received(&self) -> u64 {
        self.received.iter().sum()
    }

    pub fn total_open(&self) -> u64 {
        self.open.iter().sum()
    }
}

/// Exact per-node counts over `interval`.
///
/// The whole-trace interval works at any detail level (it is maintained
/// during the run); partial intervals need per-round records.
pub fn interval_stats(trace: &Trace, interval: Range<Round>) -> Result<IntervalStats> {
    if interval.start > interval.end || interval.end > trace.rounds {
        return Err(Error::IntervalOutOfRange {
            start: interval.start,
            end: interval.end,
            rounds: trace.rounds,
        });
    }
    if interval.start == 0 && interval.end == trace.rounds {
        return Ok(IntervalStats {
            start: 0,
            end: trace.rounds,
            nonjammed: trace.totals.nonjammed.clone(),
            received: trace.totals.received.clone(),
            open: trace.totals.open.clone(),
            jammed: trace.totals.jammed.clone(),
        });
    }
    if trace.detail == TraceDetail::Aggregates {
        return Err(Error::InsufficientDetail(
            "partial-interval stats need per-round records (masks or full detail)",
        ));
    }

    let n = trace.n();
    let mut stats = IntervalStats {
        start: interval.start,
        end: interval.end,
        nonjammed: vec![0; n],
        received: vec![0; n],
        open: vec![0; n],
        jammed: vec![0; n],
    };
    for round in interval {
        let record = &trace.records[round as usize];
        let observations;
        let obs: &[Observation] = if record.observations.is_empty() {
            observations =
                resolve_round_sequential(&trace.topology, &record.transmitters, &record.jam);
            &observations
        } else {
            &record.observations
        };
        for (u, o) in obs.iter().enumerate() {
            if record.jam.get(u) {
                stats.jammed[u] += 1;
            } else {
                stats.nonjammed[u] += 1;
                if trace
                    .topology
                    .neighbors(u as NodeId)
                    .iter()
                    .any(|&w| !record.jam.get(w as usize))
                {
                    stats.open[u] += 1;
                }
            }
            if matches!(o, Observation::Received(_)) {
                stats.received[u] += 1;
            }
        }
    }
    Ok(stats)
}

/// Competitive throughput `Σs_v / Σf_v`, or `None` when no node had a
/// non-jammed round.
pub fn competitiveness(stats: &IntervalStats) -> Option<f64> {
    let f = stats.total_nonjammed();
    if f == 0 {
        return None;
    }
    Some(stats.total_received() as f64 / f as f64)
}

/// Sector contention thresholds on `p_S`: 5, 5e, 5e².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub green: f64,
    pub yellow: f64,
    pub red: f64,
}

impl Default for ThresholdSet {
    fn default() -> Self {
        Self {
            green: 5.0,
            yellow: 5.0 * std::f64::consts::E,
            red: 5.0 * std::f64::consts::E * std::f64::consts::E,
        }
    }
}

/// Analysis frame plan: subframes of length `f = α·(T + log₂³n/(γ²ε))`,
/// frames of `⌈α·log₂n/ε⌉` subframes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FramePlan {
    pub subframe: u64,
    pub frame: u64,
}

impl FramePlan {
    pub fn from_params(alpha: f64, t: u64, n: usize, gamma: f64, epsilon: f64) -> Result<Self> {
        if alpha <= 0.0 || gamma <= 0.0 || epsilon <= 0.0 || epsilon >= 1.0 {
            return Err(Error::InvalidConfig(
                "frame plan: alpha and gamma must be positive, epsilon in (0, 1)".into(),
            ));
        }
        let lg = (n.max(2) as f64).log2();
        let subframe = ((alpha * (t as f64 + lg.powi(3) / (gamma * gamma * epsilon))).ceil()
            as u64)
            .max(1);
        let per_frame = ((alpha * lg / epsilon).ceil() as u64).max(1);
        Ok(Self {
            subframe,
            frame: subframe * per_frame,
        })
    }

    /// Explicit lengths (for desk-scale diagnostics); the frame must be a
    /// nonzero multiple of the subframe.
    pub fn explicit(subframe: u64, frame: u64) -> Result<Self> {
        if subframe == 0 || frame == 0 || !frame.is_multiple_of(subframe) {
            return Err(Error::InvalidConfig(
                "frame plan: frame must be a nonzero multiple of the subframe".into(),
            ));
        }
        Ok(Self { subframe, frame })
    }
}

fn snapshot_states(trace: &Trace) -> Result<&[Snapshot]> {
    if trace.snapshots.is_empty() {
        return Err(Error::MissingSnapshot("trace has no snapshots".into()));
    }
    Ok(&trace.snapshots)
}

fn nearest_snapshot(trace: &Trace, round: Round) -> Result<&Snapshot> {
    let snapshots = snapshot_states(trace)?;
    let idx = snapshots.partition_point(|s| s.round <= round);
    let candidates = [idx.checked_sub(1), (idx < snapshots.len()).then_some(idx)];
    candidates
        .iter()
        .flatten()
        .map(|&i| &snapshots[i])
        .min_by_key(|s| s.round.abs_diff(round))
        .ok_or_else(|| Error::MissingSnapshot(format!("no snapshot near round {round}")))
}

/// `Σ_{v ∈ D(u)} p_v` from the snapshot at `round` (or the nearest stride).
pub fn disk_contention(trace: &Trace, u: NodeId, round: Round) -> Result<f64> {
    trace.topology.check_node(u)?;
    let snapshot = nearest_snapshot(trace, round)?;
    let params = trace.params();
    Ok(trace
        .topology
        .disk(u)?
        .iter()
        .map(|&v| snapshot.states[v as usize].current_p(&params))
        .sum())
}

/// Time series of `p_S = Σ_{v ∈ S} p_v` for sector `sector` of `u`, one point
/// per snapshot.
pub fn sector_series(trace: &Trace, u: NodeId, sector: u8) -> Result<Vec<(Round, f64)>> {
    trace.topology.check_node(u)?;
    if sector > 5 {
        return Err(Error::Precondition(format!(
            "sector {sector} out of range 0..=5"
        )));
    }
    let members: Vec<NodeId> = trace
        .topology
        .neighbors(u)
        .iter()
        .copied()
        .filter(|&w| trace.topology.sector_of(u, w).expect("neighbor") == sector)
        .collect();
    let params = trace.params();
    Ok(snapshot_states(trace)?
        .iter()
        .map(|snap| {
            let p_s: f64 = members
                .iter()
                .map(|&w| snap.states[w as usize].current_p(&params))
                .sum();
            (snap.round, p_s)
        })
        .collect())
}

/// Good/bad flag per subframe: a subframe is good when `p_S` stays at or
/// below `ρ_red` at every sampled snapshot inside it. With a snapshot stride
/// above 1 the evaluation sees only the sampled rounds.
pub fn classify_subframes(
    trace: &Trace,
    plan: &FramePlan,
    u: NodeId,
    sector: u8,
) -> Result<Vec<bool>> {
    if trace.rounds < plan.subframe {
        return Err(Error::IntervalOutOfRange {
            start: 0,
            end: plan.subframe,
            rounds: trace.rounds,
        });
    }
    let series = sector_series(trace, u, sector)?;
    let red = ThresholdSet::default().red;
    let count = (trace.rounds / plan.subframe) as usize;
    let mut good = vec![true; count];
    for (round, p_s) in series {
        let idx = (round / plan.subframe) as usize;
        if idx < count && p_s > red {
            good[idx] = false;
        }
    }
    Ok(good)
}

/// One aggregate row per snapshot round: mean `p_v`, mean `T_v`, and that
/// round's reception count.
pub fn convergence_summary(trace: &Trace) -> Vec<RoundAggregate> {
    trace.series.clone()
}
