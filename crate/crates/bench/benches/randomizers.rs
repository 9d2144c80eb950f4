use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use solvdiff_bench::regime_draws;
use solvdiff_core::experiments::RandomizerRegime;
use solvdiff_core::mc::path_rng;

const DRAWS: usize = 1000;

fn samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("randomizers");
    group.throughput(Throughput::Elements(DRAWS as u64));
    for regime in RandomizerRegime::ALL {
        let dists = regime_draws(regime, DRAWS, 1);
        group.bench_with_input(BenchmarkId::new("rejection", regime.name()), &dists, |b, d| {
            let mut rng = path_rng(2, 0);
            b.iter(|| d.iter().map(|x| x.sample_rejection(&mut rng).value).sum::<u64>())
        });
        group.bench_with_input(BenchmarkId::new("chopdown", regime.name()), &dists, |b, d| {
            let mut rng = path_rng(2, 0);
            b.iter(|| d.iter().map(|x| x.sample_chopdown(&mut rng).value).sum::<u64>())
        });
    }
    group.finish();
}

fn setup(c: &mut Criterion) {
    // Cost of building the distribution (mode and log-pmf at the mode).
    c.bench_function("randomizers/build_bessel", |b| {
        b.iter(|| solvdiff_core::DiscreteLogConcave::bessel(black_box(512.3), black_box(40.0)).unwrap())
    });
}

criterion_group!(benches, samplers, setup);
criterion_main!(benches);
