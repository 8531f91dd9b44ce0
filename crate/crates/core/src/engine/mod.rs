//! The synchronous round loop.
//!
//! Each round, in order: the adversary proposes a jam mask from history (and
//! the enforcer clips it), every node flips its transmit coin, the channel is
//! resolved per node, and protocol states advance. Every coin is addressed by
//! `(master seed, purpose, node, round)`, so the per-node work inside a round
//! is order-independent: resolving nodes sequentially or in parallel yields
//! the identical record.

pub mod rng;

use serde::{Deserialize, Serialize};

use crate::adversary::{
    AdversaryBudget, Enforcer, HistoryView, JamMask, Strategy, StrategySpec,
};
use crate::bits::BitRow;
use crate::protocol::{NodeState, Observation, ProtocolParams, DEFAULT_GAMMA, DEFAULT_P_HAT};
use crate::topology::{build_udg, place_explicit, place_gaussian, place_uniform, Topology};
use crate::{Error, NodeId, Result, Round};
use rng::{RoundKey, StreamPurpose};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this node count the parallel feature still resolves rounds
/// sequentially: the per-round work is too small to amortize fork/join.
#[cfg(feature = "parallel")]
const PAR_MIN_NODES: usize = 2048;

/// Node placement specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TopologySpec {
    Uniform { n: u32, side: f64 },
    Gaussian { n: u32, sigma: f64, center: (f64, f64) },
    Explicit { coords: Vec<(f64, f64)> },
}

impl TopologySpec {
    pub fn n(&self) -> usize {
        match self {
            TopologySpec::Uniform { n, .. } | TopologySpec::Gaussian { n, .. } => *n as usize,
            TopologySpec::Explicit { coords } => coords.len(),
        }
    }

    /// Place nodes (deterministically from the seed) and build the UDG.
    pub fn build(&self, master_seed: u64) -> Result<Topology> {
        let positions = match self {
            TopologySpec::Uniform { n, side } => place_uniform(*n as usize, *side, master_seed)?,
            TopologySpec::Gaussian { n, sigma, center } => {
                place_gaussian(*n as usize, *sigma, *center, master_seed)?
            }
            TopologySpec::Explicit { coords } => place_explicit(coords.clone())?,
        };
        Ok(build_udg(positions))
    }
}

/// Protocol parameters as configured (defaults: p̂ = 1/24, γ = 0.1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    #[serde(default = "default_p_hat")]
    pub p_hat: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_p_hat() -> f64 {
    DEFAULT_P_HAT
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        Self {
            p_hat: DEFAULT_P_HAT,
            gamma: DEFAULT_GAMMA,
        }
    }
}

impl ProtocolSpec {
    pub fn params(&self) -> Result<ProtocolParams> {
        ProtocolParams::new(self.p_hat, self.gamma)
    }
}

/// Adversary configuration: a strategy plus whether the budget enforcer wraps
/// it. Enforcement makes Bernoulli traces certifiably bounded; disabling it
/// reproduces the raw i.i.d. setup, which only respects the budget in
/// expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    #[serde(flatten)]
    pub strategy: StrategySpec,
    #[serde(default = "default_enforce")]
    pub enforce: bool,
}

fn default_enforce() -> bool {
    true
}

/// How much of the run to retain in memory.
///
/// `Aggregates` keeps running per-node totals, the strided aggregate series,
/// and strided state snapshots. `Masks` additionally keeps per-round
/// transmitter/jam bitsets (enough to audit budgets and recount any
/// interval). `Full` additionally stores per-node observations verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceDetail {
    Aggregates,
    Masks,
    Full,
}

/// A complete experiment description; everything a run needs, and everything
/// needed to reproduce it bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: TopologySpec,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    pub budget: AdversaryBudget,
    pub adversary: AdversarySpec,
    /// Round count; omitted means the default formula
    /// `⌈(T + log₂³n/(γ²ε)) · log₂n/ε⌉`.
    #[serde(default)]
    pub rounds: Option<u64>,
    pub master_seed: u64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: u64,
    #[serde(default = "default_detail")]
    pub detail: TraceDetail,
}

fn default_stride() -> u64 {
    1
}

fn default_detail() -> TraceDetail {
    TraceDetail::Aggregates
}

/// Default experiment length: `⌈(T + log₂³n/(γ²ε)) · log₂n/ε⌉` rounds.
pub fn default_round_count(n: usize, budget: &AdversaryBudget, gamma: f64) -> u64 {
    let lg = (n.max(2) as f64).log2();
    let subframe = budget.t as f64 + lg.powi(3) / (gamma * gamma * budget.epsilon);
    ((subframe * lg / budget.epsilon).ceil() as u64).max(1)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidConfig("name: must be nonempty".into()));
        }
        let params = self.protocol.params()?;
        self.budget.validate()?;
        if self.topology.n() == 0 {
            return Err(Error::InvalidConfig("topology.n: must be at least 1".into()));
        }
        if let Some(rounds) = self.rounds {
            if rounds == 0 {
                return Err(Error::InvalidConfig("rounds: must be at least 1".into()));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidConfig(
                "snapshot_stride: must be at least 1".into(),
            ));
        }
        let strategy = Strategy::from_spec(&self.strategy_spec(), &self.budget, self.topology.n())?;
        if strategy.requires_enforcement() && !self.adversary.enforce {
            return Err(Error::InvalidConfig(
                "adversary.enforce: the greedy strategy is unbounded without enforcement".into(),
            ));
        }
        let _ = params;
        Ok(())
    }

    fn strategy_spec(&self) -> StrategySpec {
        self.adversary.strategy.clone()
    }

    pub fn effective_rounds(&self) -> u64 {
        self.rounds.unwrap_or_else(|| {
            default_round_count(self.topology.n(), &self.budget, self.protocol.gamma)
        })
    }
}

/// Everything that happened in one round.
///
/// A node is a transmitter xor has a sensing observation; a `Received(s)` at
/// `u` means `s` was `u`'s unique transmitting neighbor and `u` was not
/// jammed.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub transmitters: BitRow,
    pub jam: JamMask,
    /// Per-node observations; populated only at `Full` detail.
    pub observations: Vec<Observation>,
}

/// Per-round aggregate row: state means are taken at the start of the round,
/// `successes` counts that round's receptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundAggregate {
    pub round: Round,
    pub mean_p: f64,
    pub mean_t: f64,
    pub successes: u32,
}

/// Strided copy of all node states as of the start of `round` (the final
/// snapshot, at `round == rounds`, holds the end-of-run states).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub round: Round,
    pub states: Vec<NodeState>,
}

/// Running per-node counters over the whole run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeTotals {
    /// Non-jammed rounds.
    pub nonjammed: Vec<u64>,
    /// Rounds receiving a message.
    pub received: Vec<u64>,
    /// Open rounds: node and at least one neighbor non-jammed.
    pub open: Vec<u64>,
    /// Jammed rounds.
    pub jammed: Vec<u64>,
}

impl NodeTotals {
    fn new(n: usize) -> Self {
        Self {
            nonjammed: vec![0; n],
            received: vec![0; n],
            open: vec![0; n],
            jammed: vec![0; n],
        }
    }
}

/// Append-only record of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: ExperimentConfig,
    pub topology: Topology,
    pub detail: TraceDetail,
    pub rounds: u64,
    /// One record per round at `Masks`/`Full` detail; empty at `Aggregates`.
    pub records: Vec<RoundRecord>,
    pub totals: NodeTotals,
    pub series: Vec<RoundAggregate>,
    pub snapshots: Vec<Snapshot>,
    pub final_states: Vec<NodeState>,
}

impl Trace {
    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn params(&self) -> ProtocolParams {
        self.config.protocol.params().expect("validated at run start")
    }
}

#[cfg(feature = "parallel")]
fn resolve_node(topo: &Topology, u: usize, transmitters: &BitRow, jammed: bool) -> Observation {
    if transmitters.get(u) {
        return Observation::Transmitted;
    }
    if jammed {
        // A jammed channel senses busy regardless of traffic.
        return Observation::Busy;
    }
    let mut sender: Option<NodeId> = None;
    for &w in topo.neighbors(u as NodeId) {
        if transmitters.get(w as usize) {
            if sender.is_some() {
                return Observation::Busy;
            }
            sender = Some(w);
        }
    }
    match sender {
        Some(w) => Observation::Received(w),
        None => Observation::Idle,
    }
}

/// Resolve one round sequentially.
///
/// Scatters from the (typically few) transmitters instead of scanning every
/// node's neighborhood; same observations as the per-node gather.
pub fn resolve_round_sequential(
    topo: &Topology,
    transmitters: &BitRow,
    jam: &JamMask,
) -> Vec<Observation> {
    let n = topo.n();
    let mut heard = vec![0u8; n];
    let mut sender = vec![0 as NodeId; n];
    for t in transmitters.ones() {
        for &w in topo.neighbors(t as NodeId) {
            let count = &mut heard[w as usize];
            if *count < 2 {
                *count += 1;
                sender[w as usize] = t as NodeId;
            }
        }
    }
    (0..n)
        .map(|u| {
            if transmitters.get(u) {
                Observation::Transmitted
            } else if jam.get(u) || heard[u] >= 2 {
                Observation::Busy
            } else if heard[u] == 1 {
                Observation::Received(sender[u])
            } else {
                Observation::Idle
            }
        })
        .collect()
}

/// Resolve one round in parallel over nodes. Identical output to the
/// sequential path: each node's observation is a pure function of
/// `(transmitters ∩ N(u), jam(u))`.
#[cfg(feature = "parallel")]
pub fn resolve_round_parallel(
    topo: &Topology,
    transmitters: &BitRow,
    jam: &JamMask,
) -> Vec<Observation> {
    (0..topo.n())
        .into_par_iter()
        .map(|u| resolve_node(topo, u, transmitters, jam.get(u)))
        .collect()
}

/// Per-node channel outcome for one round: transmitters see `Transmitted`;
/// a sensing node sees busy if jammed or ≥ 2 neighbors transmit, receives if
/// exactly one transmits and it is not jammed, and idle otherwise.
pub fn resolve_round(topo: &Topology, transmitters: &BitRow, jam: &JamMask) -> Vec<Observation> {
    #[cfg(feature = "parallel")]
    if topo.n() >= PAR_MIN_NODES {
        return resolve_round_parallel(topo, transmitters, jam);
    }
    resolve_round_sequential(topo, transmitters, jam)
}

fn transmit_row(key: RoundKey, states: &[NodeState], params: &ProtocolParams) -> BitRow {
    let flip = |v: usize| states[v].decide_transmit(params, key.coin(v as NodeId));
    #[cfg(feature = "parallel")]
    if states.len() >= PAR_MIN_NODES {
        let bools: Vec<bool> = (0..states.len()).into_par_iter().map(flip).collect();
        return BitRow::from_bools(&bools);
    }
    BitRow::from_fn(states.len(), flip)
}

fn apply_round(
    states: &mut [NodeState],
    observations: &[Observation],
    round: Round,
    params: &ProtocolParams,
) -> Result<()> {
    #[cfg(feature = "parallel")]
    if states.len() >= PAR_MIN_NODES {
        return states
            .par_iter_mut()
            .zip(observations.par_iter())
            .try_for_each(|(s, &obs)| s.apply_observation(obs, round, params));
    }
    states
        .iter_mut()
        .zip(observations)
        .try_for_each(|(s, &obs)| s.apply_observation(obs, round, params))
}

/// Run an experiment to completion. Fully deterministic given the config and
/// its master seed.
pub fn run(config: &ExperimentConfig) -> Result<Trace> {
    config.validate()?;
    let params = config.protocol.params()?;
    let topology = config.topology.build(config.master_seed)?;
    let n = topology.n();
    let rounds = config.effective_rounds();
    let stride = config.snapshot_stride;
    let detail = config.detail;

    let strategy = Strategy::from_spec(&config.adversary.strategy, &config.budget, n)?;
    let mut enforcer = config
        .adversary
        .enforce
        .then(|| Enforcer::new(&config.budget, n));

    let mut states: Vec<NodeState> = vec![NodeState::initial(); n];
    let mut totals = NodeTotals::new(n);
    let mut records: Vec<RoundRecord> = Vec::with_capacity(match detail {
        TraceDetail::Aggregates => 0,
        _ => rounds as usize,
    });
    let mut series: Vec<RoundAggregate> = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();

    for round in 0..rounds {
        // Adversary first: its view ends at round − 1.
        let proposed = {
            let view = HistoryView {
                round,
                n,
                records: &records,
                states: &states,
                params: &params,
            };
            let mut rng =
                rng::derive_stream(config.master_seed, StreamPurpose::Adversary, None, Some(round));
            strategy.decide(&view, round, &mut rng)
        };
        let jam = match enforcer.as_mut() {
            Some(e) => e.enforce(&proposed),
            None => proposed,
        };

        let at_stride = round.is_multiple_of(stride);
        let (mean_p, mean_t) = if at_stride {
            mean_state(&states, &params)
        } else {
            (0.0, 0.0)
        };

        let key = RoundKey::new(config.master_seed, StreamPurpose::Transmit, Some(round));
        let transmitters = transmit_row(key, &states, &params);
        let observations = resolve_round(&topology, &transmitters, &jam);

        let mut successes = 0u32;
        for (u, obs) in observations.iter().enumerate() {
            if jam.get(u) {
                totals.jammed[u] += 1;
            } else {
                totals.nonjammed[u] += 1;
                if topology.neighbors(u as NodeId).iter().any(|&w| !jam.get(w as usize)) {
                    totals.open[u] += 1;
                }
            }
            if let Observation::Received(_) = obs {
                totals.received[u] += 1;
                successes += 1;
            }
        }

        if at_stride {
            series.push(RoundAggregate {
                round,
                mean_p,
                mean_t,
                successes,
            });
            snapshots.push(Snapshot {
                round,
                states: states.clone(),
            });
        }

        apply_round(&mut states, &observations, round, &params)?;

        if detail != TraceDetail::Aggregates {
            records.push(RoundRecord {
                transmitters,
                jam,
                observations: if detail == TraceDetail::Full {
                    observations
                } else {
                    Vec::new()
                },
            });
        }
    }

    // End-of-run snapshot, after the last update.
    snapshots.push(Snapshot {
        round: rounds,
        states: states.clone(),
    });

    Ok(Trace {
        config: config.clone(),
        topology,
        detail,
        rounds,
        records,
        totals,
        series,
        snapshots,
        final_states: states,
    })
}

fn mean_state(states: &[NodeState], params: &ProtocolParams) -> (f64, f64) {
    // Sequential folds keep float sums bit-stable regardless of thread count.
    let n = states.len() as f64;
    let sum_p: f64 = states.iter().map(|s| s.current_p(params)).sum();
    let sum_t: f64 = states.iter().map(|s| s.threshold() as f64).sum();
    (sum_p / n, sum_t / n)
}
