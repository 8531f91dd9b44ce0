//! Jamming strategies, the sliding-window budget enforcer, and the post-hoc
//! budget auditor.
//!
//! A strategy decides a per-node jam mask for round `t` from the recorded
//! history of rounds `< t` — never from round `t`'s transmit decisions. The
//! enforcer guarantees the `(T, 1−ε)` budget online by clearing any bit that
//! would push a node over `⌊(1−ε)T⌋` jammed rounds within the trailing window
//! of size `T`; the auditor re-checks every sliding window of a finished
//! trace exactly.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bits::BitRow;
use crate::engine::rng::StreamRng;
use crate::engine::{RoundRecord, Trace};
use crate::protocol::{NodeState, ProtocolParams};
use crate::topology::Topology;
use crate::{Error, NodeId, Result, Round};

/// `(T, 1−ε)` jamming budget: in every window of `T` rounds, each node may be
/// jammed at most `⌊(1−ε)T⌋` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryBudget {
    /// Window length in rounds.
    pub t: u64,
    /// Guaranteed non-jammed fraction, in (0, 1).
    pub epsilon: f64,
}

impl AdversaryBudget {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 {
            return Err(Error::InvalidConfig("budget.t: must be at least 1".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 || self.epsilon >= 1.0 {
            return Err(Error::InvalidConfig(
                "budget.epsilon: must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// `⌊(1−ε)·T⌋`. The nudge keeps exact integer products from flooring
    /// down one step under floating-point rounding.
    pub fn jam_limit(&self) -> u64 {
        (((1.0 - self.epsilon) * self.t as f64) + 1e-9).floor() as u64
    }

    /// Non-jammed rounds per `T`-interval in the periodic attack patterns:
    /// `T − ⌊(1−ε)T⌋`.
    pub fn clear_rounds(&self) -> u64 {
        self.t - self.jam_limit()
    }
}

/// Per-node jam decisions for one round (`true` = jammed).
pub type JamMask = BitRow;

/// Read access to everything that happened before the round being decided.
///
/// Covers exactly the completed rounds: per-round records (when the run keeps
/// them) and the node states as of the end of round `round − 1`. The current
/// round's transmit decisions do not exist yet.
pub struct HistoryView<'a> {
    pub round: Round,
    pub n: usize,
    /// Records for rounds `< round`; empty when the trace detail keeps only
    /// aggregates.
    pub records: &'a [RoundRecord],
    pub states: &'a [NodeState],
    pub params: &'a ProtocolParams,
}

/// Strategy configuration as it appears in experiment configs:
/// `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum StrategySpec {
    NoJam,
    /// Each node is jammed independently with probability `1−ε` per round.
    Bernoulli,
    /// 1-uniform periodic burst: the first `⌊(1−ε)T⌋` rounds of every
    /// `T`-interval are jammed at every node, the rest are clear.
    Burst1u,
    /// 2-uniform split attack on a group `U` and a victim `v`.
    Split2u { group: Vec<NodeId>, victim: NodeId },
    /// Low-density attack: the victim is never jammed, the group only sees
    /// the first `εT` rounds of each interval.
    LowDensity { group: Vec<NodeId>, victim: NodeId },
    /// Budget-saturating adaptive jammer: proposes jamming everyone every
    /// round and relies on the enforcer to clip to the budget.
    Greedy,
}

/// A runtime jamming strategy. Built from a [`StrategySpec`] and the budget.
#[derive(Debug, Clone)]
pub enum Strategy {
    NoJam,
    Bernoulli { jam_prob: f64 },
    Burst1Uniform { t: u64, clear: u64 },
    Split2Uniform { member: Vec<bool>, victim: NodeId, t: u64, clear: u64 },
    LowDensity { member: Vec<bool>, victim: NodeId, t: u64, clear: u64 },
    Greedy,
}

fn group_membership(group: &[NodeId], victim: NodeId, n: usize) -> Result<Vec<bool>> {
    if group.is_empty() {
        return Err(Error::InvalidConfig(
            "adversary.params.group: must be nonempty".into(),
        ));
    }
    let mut member = vec![false; n];
    for &u in group {
        if u as usize >= n {
            return Err(Error::InvalidConfig(format!(
                "adversary.params.group: node {u} out of range"
            )));
        }
        if u == victim {
            return Err(Error::InvalidConfig(
                "adversary.params: group and victim overlap".into(),
            ));
        }
        member[u as usize] = true;
    }
    if victim as usize >= n {
        return Err(Error::InvalidConfig(format!(
            "adversary.params.victim: node {victim} out of range"
        )));
    }
    Ok(member)
}

/// Per `T`-interval: `U` is clear on the first `εT` rounds and jammed
/// otherwise; `v` is jammed except on the last `εT` rounds. Both see exactly
/// `⌊(1−ε)T⌋` jammed rounds per interval.
pub fn split_2uniform_attack(
    budget: &AdversaryBudget,
    group: &[NodeId],
    victim: NodeId,
    n: usize,
) -> Result<Strategy> {
    budget.validate()?;
    Ok(Strategy::Split2Uniform {
        member: group_membership(group, victim, n)?,
        victim,
        t: budget.t,
        clear: budget.clear_rounds(),
    })
}

/// The victim is never jammed; `U` is jammed except on the first `εT` rounds
/// of each `T`-interval.
pub fn low_density_attack(
    budget: &AdversaryBudget,
    group: &[NodeId],
    victim: NodeId,
    n: usize,
) -> Result<Strategy> {
    budget.validate()?;
    Ok(Strategy::LowDensity {
        member: group_membership(group, victim, n)?,
        victim,
        t: budget.t,
        clear: budget.clear_rounds(),
    })
}

impl Strategy {
    pub fn from_spec(spec: &StrategySpec, budget: &AdversaryBudget, n: usize) -> Result<Strategy> {
        budget.validate()?;
        match spec {
            StrategySpec::NoJam => Ok(Strategy::NoJam),
            StrategySpec::Bernoulli => Ok(Strategy::Bernoulli {
                jam_prob: 1.0 - budget.epsilon,
            }),
            StrategySpec::Burst1u => Ok(Strategy::Burst1Uniform {
                t: budget.t,
                clear: budget.clear_rounds(),
            }),
            StrategySpec::Split2u { group, victim } => {
                split_2uniform_attack(budget, group, *victim, n)
            }
            StrategySpec::LowDensity { group, victim } => {
                low_density_attack(budget, group, *victim, n)
            }
            StrategySpec::Greedy => Ok(Strategy::Greedy),
        }
    }

    /// Does this strategy only stay within budget when wrapped by the
    /// enforcer?
    pub fn requires_enforcement(&self) -> bool {
        matches!(self, Strategy::Greedy)
    }

    /// Propose a jam mask for `round`. Pure in the view (rounds `< round`),
    /// the strategy parameters, and the provided stream.
    pub fn decide(&self, view: &HistoryView<'_>, round: Round, rng: &mut StreamRng) -> JamMask {
        let n = view.n;
        match self {
            Strategy::NoJam => BitRow::zeros(n),
            Strategy::Bernoulli { jam_prob } => BitRow::from_fn(n, |_| rng.uniform() < *jam_prob),
            Strategy::Burst1Uniform { t, clear } => {
                let jam = round % t < t - clear;
                BitRow::from_fn(n, |_| jam)
            }
            Strategy::Split2Uniform {
                member,
                victim,
                t,
                clear,
            } => {
                let offset = round % t;
                BitRow::from_fn(n, |v| {
                    if v as NodeId == *victim {
                        offset < t - clear
                    } else {
                        member[v] && offset >= *clear
                    }
                })
            }
            Strategy::LowDensity {
                member,
                victim,
                t,
                clear,
            } => {
                let offset = round % t;
                BitRow::from_fn(n, |v| {
                    v as NodeId != *victim && member[v] && offset >= *clear
                })
            }
            Strategy::Greedy => BitRow::from_fn(n, |_| true),
        }
    }
}

/// Online budget guard.
///
/// Keeps the last `T−1` granted bits per node in a ring buffer, O(1) amortized
/// per node per round. Enforcing windows of size exactly `T` implies any
/// window of size `kT` holds at most `(1−ε)kT` jammed rounds.
pub struct Enforcer {
    limit: u64,
    window: usize,
    history: Vec<VecDeque<bool>>,
    counts: Vec<u64>,
}

impl Enforcer {
    pub fn new(budget: &AdversaryBudget, n: usize) -> Self {
        Self {
            limit: budget.jam_limit(),
            window: budget.t as usize,
            history: vec![VecDeque::with_capacity(budget.t as usize); n],
            counts: vec![0; n],
        }
    }

    /// Clip a proposed mask to the budget. Must be called exactly once per
    /// round, rounds in order.
    pub fn enforce(&mut self, proposed: &JamMask) -> JamMask {
        let n = proposed.len();
        let granted = BitRow::from_fn(n, |v| proposed.get(v) && self.counts[v] < self.limit);
        for v in 0..n {
            let bit = granted.get(v);
            self.history[v].push_back(bit);
            self.counts[v] += bit as u64;
            if self.history[v].len() >= self.window {
                let old = self.history[v].pop_front().expect("nonempty");
                self.counts[v] -= old as u64;
            }
        }
        granted
    }
}

/// Per-node audit results over a finished trace.
#[derive(Debug, Clone, Serialize)]
pub struct NodeAudit {
    pub node: NodeId,
    /// Maximum jammed count over all sliding windows of size T (over the
    /// whole trace when it is shorter than T).
    pub max_window_jammed: u64,
    pub max_window_fraction: f64,
    pub jammed_rounds: u64,
    pub nonjammed_rounds: u64,
    /// Non-jammed rounds in which at least one neighbor was also non-jammed.
    pub open_rounds: u64,
    /// Fraction of non-jammed rounds that are open.
    pub open_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub t: u64,
    pub epsilon: f64,
    pub jam_limit: u64,
    pub rounds: u64,
    pub max_fraction: f64,
    pub nodes: Vec<NodeAudit>,
    /// Nodes whose worst window exceeds the budget.
    pub violations: Vec<NodeId>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact post-hoc sliding-window audit of recorded jam masks.
pub fn audit_masks(masks: &[JamMask], topo: &Topology, budget: &AdversaryBudget) -> AuditReport {
    let n = topo.n();
    let rounds = masks.len() as u64;
    let window = (budget.t as usize).min(masks.len()).max(1);
    let limit = budget.jam_limit();
    let mut nodes = Vec::with_capacity(n);
    let mut violations = Vec::new();
    let mut max_fraction: f64 = 0.0;

    for v in 0..n {
        let mut in_window = 0u64;
        let mut max_window = 0u64;
        let mut jammed_total = 0u64;
        let mut open = 0u64;
        for (r, mask) in masks.iter().enumerate() {
            let bit = mask.get(v);
            in_window += bit as u64;
            jammed_total += bit as u64;
            if r >= window {
                in_window -= masks[r - window].get(v) as u64;
            }
            if r + 1 >= window {
                max_window = max_window.max(in_window);
            }
            if !bit && topo.neighbors(v as NodeId).iter().any(|&w| !mask.get(w as usize)) {
                open += 1;
            }
        }
        let nonjammed = rounds - jammed_total;
        let fraction = if rounds == 0 {
            0.0
        } else {
            max_window as f64 / window as f64
        };
        max_fraction = max_fraction.max(fraction);
        if masks.len() >= window && max_window > limit {
            violations.push(v as NodeId);
        }
        nodes.push(NodeAudit {
            node: v as NodeId,
            max_window_jammed: max_window,
            max_window_fraction: fraction,
            jammed_rounds: jammed_total,
            nonjammed_rounds: nonjammed,
            open_rounds: open,
            open_fraction: if nonjammed == 0 {
                0.0
            } else {
                open as f64 / nonjammed as f64
            },
        });
    }

    AuditReport {
        t: budget.t,
        epsilon: budget.epsilon,
        jam_limit: limit,
        rounds,
        max_fraction,
        nodes,
        violations,
    }
}

/// Audit a finished trace against a budget. Requires per-round masks, i.e. a
/// trace recorded at `masks` or `full` detail.
pub fn audit(trace: &Trace, budget: &AdversaryBudget) -> Result<AuditReport> {
    if trace.records.len() as u64 != trace.rounds {
        return Err(Error::InsufficientDetail(
            "budget audit needs per-round jam masks (record the trace at masks or full detail)",
        ));
    }
    let masks: Vec<JamMask> = trace.records.iter().map(|r| r.jam.clone()).collect();
    Ok(audit_masks(&masks, &trace.topology, budget))
}
