//! Sequential vs parallel round resolution, and end-to-end run throughput.
//!
//! The parallel path needs a few thousand nodes before fork/join overhead
//! amortizes; these benches make the crossover visible.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jade_sim::adversary::{AdversaryBudget, StrategySpec};
use jade_sim::bits::BitRow;
use jade_sim::engine::rng::transmit_coin;
use jade_sim::engine::{
    resolve_round_sequential, run, AdversarySpec, ExperimentConfig, ProtocolSpec, TopologySpec,
    TraceDetail,
};
use jade_sim::topology::{build_udg, place_uniform, Topology};

fn fixture(n: usize) -> (Topology, BitRow, BitRow) {
    // Constant density: scale the plane so the expected degree stays put.
    let side = 4.0 * (n as f64 / 500.0).sqrt();
    let topo = build_udg(place_uniform(n, side, 7).unwrap());
    let transmitters = BitRow::from_fn(n, |u| transmit_coin(1, u as u32, 0) < 1.0 / 24.0);
    let jam = BitRow::from_fn(n, |u| transmit_coin(2, u as u32, 0) < 0.7);
    (topo, transmitters, jam)
}

fn bench_resolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolve_round");
    for n in [512usize, 2048, 8192] {
        let (topo, transmitters, jam) = fixture(n);
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| black_box(resolve_round_sequential(&topo, &transmitters, &jam)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| {
                black_box(jade_sim::engine::resolve_round_parallel(
                    &topo,
                    &transmitters,
                    &jam,
                ))
            })
        });
    }
    group.finish();
}

fn bench_run(c: &mut Criterion) {
    let config = ExperimentConfig {
        name: "bench".into(),
        topology: TopologySpec::Uniform { n: 500, side: 4.0 },
        protocol: ProtocolSpec::default(),
        budget: AdversaryBudget { t: 200, epsilon: 0.3 },
        adversary: AdversarySpec {
            strategy: StrategySpec::Bernoulli,
            enforce: true,
        },
        rounds: Some(2_000),
        master_seed: 1,
        snapshot_stride: 100,
        detail: TraceDetail::Aggregates,
    };
    c.bench_function("run/bernoulli-n500-2k-rounds", |b| {
        b.iter(|| black_box(run(&config).unwrap()))
    });
}

criterion_group!(benches, bench_resolve, bench_run);
criterion_main!(benches);
