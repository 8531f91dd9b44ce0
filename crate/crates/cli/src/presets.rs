//! Built-in experiment presets: the throughput and convergence scenarios plus
//! the two lower-bound attack constructions.

use jade_sim::adversary::{AdversaryBudget, StrategySpec};
use jade_sim::engine::{AdversarySpec, ExperimentConfig, ProtocolSpec, TopologySpec, TraceDetail};
use jade_sim::NodeId;

pub struct ExperimentPreset {
    pub name: &'static str,
    pub about: &'static str,
    pub config: ExperimentConfig,
}

pub const PRESET_NAMES: [&str; 5] = [
    "fig-throughput-uniform",
    "fig-throughput-gaussian",
    "fig-convergence",
    "attack-split2u",
    "attack-lowdensity",
];

fn paper_budget() -> AdversaryBudget {
    AdversaryBudget {
        t: 200,
        epsilon: 0.3,
    }
}

fn bernoulli() -> AdversarySpec {
    AdversarySpec {
        strategy: StrategySpec::Bernoulli,
        enforce: true,
    }
}

/// A tight cluster of `m` nodes around `center` (pairwise distance ≤ 2r) plus
/// a victim within range of all of them.
fn cluster_with_victim(m: usize, radius: f64, victim_at: (f64, f64)) -> Vec<(f64, f64)> {
    let mut coords: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let a = i as f64 / m as f64 * std::f64::consts::TAU;
            (radius * a.cos(), radius * a.sin())
        })
        .collect();
    coords.push(victim_at);
    coords
}

pub fn find(name: &str) -> Option<ExperimentPreset> {
    let preset = match name {
        "fig-throughput-uniform" => ExperimentPreset {
            name: "fig-throughput-uniform",
            about: "500 nodes uniform on a 4x4 plane, Bernoulli jamming at 1-eps; \
                    competitiveness lands in the 20-35% band",
            config: ExperimentConfig {
                name: "fig-throughput-uniform".into(),
                topology: TopologySpec::Uniform { n: 500, side: 4.0 },
                protocol: ProtocolSpec::default(),
                budget: paper_budget(),
                adversary: bernoulli(),
                rounds: Some(200_000),
                master_seed: 1,
                snapshot_stride: 1_000,
                detail: TraceDetail::Aggregates,
            },
        },
        "fig-throughput-gaussian" => ExperimentPreset {
            name: "fig-throughput-gaussian",
            about: "500 nodes, coordinates N(plane center, 1), Bernoulli jamming",
            config: ExperimentConfig {
                name: "fig-throughput-gaussian".into(),
                topology: TopologySpec::Gaussian {
                    n: 500,
                    sigma: 1.0,
                    center: (2.0, 2.0),
                },
                protocol: ProtocolSpec::default(),
                budget: paper_budget(),
                adversary: bernoulli(),
                rounds: Some(200_000),
                master_seed: 1,
                snapshot_stride: 1_000,
                detail: TraceDetail::Aggregates,
            },
        },
        "fig-convergence" => ExperimentPreset {
            name: "fig-convergence",
            about: "per-round head of the uniform scenario; mean p_v leaves the \
                    start-up band within tens of rounds, mean T_v settles in [2,4]",
            config: ExperimentConfig {
                name: "fig-convergence".into(),
                topology: TopologySpec::Uniform { n: 500, side: 4.0 },
                protocol: ProtocolSpec::default(),
                budget: paper_budget(),
                adversary: bernoulli(),
                rounds: Some(2_000),
                master_seed: 1,
                snapshot_stride: 1,
                detail: TraceDetail::Aggregates,
            },
        },
        "attack-split2u" => {
            // 24 = 1/p̂ clique members, all within range of the victim. The
            // interval must be long next to the threshold cap so the group's
            // send probabilities decay away before the victim's clear window.
            let group: Vec<NodeId> = (0..24).collect();
            ExperimentPreset {
                name: "attack-split2u",
                about: "2-uniform split attack: the group sees only the first eps*T \
                        rounds of each interval, the victim only the last; the victim \
                        starves while the group keeps its throughput",
                config: ExperimentConfig {
                    name: "attack-split2u".into(),
                    topology: TopologySpec::Explicit {
                        coords: cluster_with_victim(24, 0.05, (0.9, 0.0)),
                    },
                    protocol: ProtocolSpec::default(),
                    budget: AdversaryBudget {
                        t: 2_000,
                        epsilon: 0.3,
                    },
                    adversary: AdversarySpec {
                        strategy: StrategySpec::Split2u { group, victim: 24 },
                        enforce: false, // the pattern is budget-exact by construction
                    },
                    rounds: Some(20_000),
                    master_seed: 1,
                    snapshot_stride: 100,
                    detail: TraceDetail::Masks,
                },
            }
        }
        "attack-lowdensity" => {
            let group: Vec<NodeId> = vec![0, 1];
            ExperimentPreset {
                name: "attack-lowdensity",
                about: "low-density attack: a sparse neighborhood (|U| = 2, eps = 0.05) \
                        is jammed outside the first eps*T rounds of each interval while \
                        the victim is never jammed; total throughput collapses",
                config: ExperimentConfig {
                    name: "attack-lowdensity".into(),
                    topology: TopologySpec::Explicit {
                        coords: vec![(-0.05, 0.0), (0.05, 0.0), (0.5, 0.0)],
                    },
                    protocol: ProtocolSpec::default(),
                    budget: AdversaryBudget {
                        t: 200,
                        epsilon: 0.05,
                    },
                    adversary: AdversarySpec {
                        strategy: StrategySpec::LowDensity { group, victim: 2 },
                        enforce: false,
                    },
                    rounds: Some(20_000),
                    master_seed: 1,
                    snapshot_stride: 100,
                    detail: TraceDetail::Masks,
                },
            }
        }
        _ => return None,
    };
    Some(preset)
}

pub fn all() -> Vec<ExperimentPreset> {
    PRESET_NAMES.iter().map(|n| find(n).expect("known")).collect()
}
