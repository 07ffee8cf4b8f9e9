use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use echo_core::graph::{largest_strongly_connected_component, random_directed_graph, triad_census};
use echo_core::presets::preset;
use echo_core::{Params, SimState, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STEPS: u64 = 10_000;

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.throughput(Throughput::Elements(STEPS));
    for strategy in Strategy::ALL {
        for (n, e) in [(100, 400), (10_000, 100_000)] {
            let params = Params {
                n,
                e,
                strategy,
                ..preset("fig3").unwrap()
            };
            group.bench_with_input(BenchmarkId::new(strategy.as_str(), n), &params, |b, p| {
                b.iter_batched(
                    || SimState::new(p.clone(), None).unwrap().with_event_log(false),
                    |mut s| {
                        s.advance(STEPS);
                        s
                    },
                    BatchSize::LargeInput,
                )
            });
        }
    }
    group.finish();
}

fn graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for (n, e) in [(1_000, 10_000), (10_000, 100_000)] {
        let g = random_directed_graph(n, e, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        group.bench_with_input(BenchmarkId::new("triad_census", n), &g, |b, g| b.iter(|| triad_census(black_box(g))));
        group.bench_with_input(BenchmarkId::new("largest_scc", n), &g, |b, g| {
            b.iter(|| largest_strongly_connected_component(black_box(g)))
        });
    }
    group.finish();
}

criterion_group!(benches, steps, graphs);
criterion_main!(benches);
