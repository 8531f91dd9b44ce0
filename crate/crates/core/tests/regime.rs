//! Medium-scale behavior of the full pipeline in the dense uniform regime:
//! contention stays bounded, sector subframes stay good, and the budget
//! auditor certifies enforced Bernoulli jamming.

use std::sync::OnceLock;

use jade_sim::adversary::{audit, AdversaryBudget, StrategySpec};
use jade_sim::engine::{
    run, AdversarySpec, ExperimentConfig, ProtocolSpec, TopologySpec, Trace, TraceDetail,
};
use jade_sim::metrics::{
    classify_subframes, competitiveness, disk_contention, interval_stats, FramePlan, ThresholdSet,
};
use jade_sim::NodeId;

fn regime_trace() -> &'static Trace {
    static TRACE: OnceLock<Trace> = OnceLock::new();
    TRACE.get_or_init(|| {
        run(&ExperimentConfig {
            name: "regime".into(),
            topology: TopologySpec::Uniform { n: 300, side: 4.0 },
            protocol: ProtocolSpec::default(),
            budget: AdversaryBudget {
                t: 200,
                epsilon: 0.3,
            },
            adversary: AdversarySpec {
                strategy: StrategySpec::Bernoulli,
                enforce: true,
            },
            rounds: Some(15_000),
            master_seed: 21,
            snapshot_stride: 50,
            detail: TraceDetail::Masks,
        })
        .unwrap()
    })
}

#[test]
fn dense_uniform_regime_is_dense_enough() {
    let trace = regime_trace();
    let report = trace.topology.validate_regime(0.3);
    assert!(report.connected);
    assert!(report.density_ok, "min disk {}", report.min_disk);
}

#[test]
fn late_round_disk_contention_is_bounded() {
    let trace = regime_trace();
    let thresholds = ThresholdSet::default();
    let mut contentions: Vec<f64> = (0..trace.n())
        .map(|u| disk_contention(trace, u as NodeId, trace.rounds).unwrap())
        .collect();
    contentions.sort_by(f64::total_cmp);
    let median = contentions[contentions.len() / 2];
    assert!(
        median <= thresholds.red,
        "median late contention {median} above rho_red"
    );
}

#[test]
fn all_subframes_good_at_desk_scale() {
    let trace = regime_trace();
    let plan = FramePlan::explicit(1_500, 15_000).unwrap();
    for u in [0, 50, 150] {
        for sector in 0..6 {
            let flags = classify_subframes(trace, &plan, u, sector).unwrap();
            let bad = flags.iter().filter(|&&g| !g).count() as f64 / flags.len() as f64;
            assert!(bad <= 0.3 * 0.2, "node {u} sector {sector}: bad fraction {bad}");
        }
    }
}

#[test]
fn enforced_bernoulli_trace_audits_clean() {
    let trace = regime_trace();
    let report = audit(trace, &trace.config.budget).unwrap();
    assert!(report.ok(), "violations at {:?}", report.violations);
    // The enforcer clips at ⌊(1−ε)T⌋, and Bernoulli at rate 1−ε brushes
    // against it somewhere over 15k rounds.
    assert!(report.max_fraction <= 0.7);
}

#[test]
fn throughput_and_thresholds_in_expected_bands() {
    let trace = regime_trace();
    let stats = interval_stats(trace, 0..trace.rounds).unwrap();
    let comp = competitiveness(&stats).unwrap();
    assert!((0.1..0.5).contains(&comp), "competitiveness {comp}");

    let tail: Vec<f64> = trace
        .series
        .iter()
        .filter(|row| row.round >= trace.rounds - trace.rounds / 10)
        .map(|row| row.mean_t)
        .collect();
    let mean_t = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!((1.0..=5.0).contains(&mean_t), "mean T {mean_t}");
}

#[test]
fn counting_identity_holds_network_wide() {
    let trace = regime_trace();
    let stats = interval_stats(trace, 0..trace.rounds).unwrap();
    for v in 0..trace.n() {
        assert_eq!(stats.nonjammed[v] + stats.jammed[v], trace.rounds);
        assert!(stats.received[v] <= stats.nonjammed[v]);
        assert!(stats.open[v] <= stats.nonjammed[v]);
    }
}
