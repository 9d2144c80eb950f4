use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use solvdiff_core::experiments::{reference_bessel_k, reference_cev};
use solvdiff_core::mc::path_rng;
use solvdiff_core::{
    AssetPathSampler, Boundary, CevApproach, CevAsset, ExactSampler, PseudoRandom, QmcPoint, Scheme, SqbAsset,
    SqbParams, TimeGrid,
};

fn run(b: &mut criterion::Bencher, sampler: &dyn AssetPathSampler) {
    let mut out = vec![0.0; sampler.grid().len()];
    let mut i = 0u64;
    b.iter(|| {
        i += 1;
        let mut src = PseudoRandom::new(path_rng(9, i));
        sampler.sample(&mut src, &mut out).unwrap().fht
    })
}

fn sqb_schemes(c: &mut Criterion) {
    let grid = TimeGrid::uniform(1.0, 128).unwrap();
    let params = SqbParams::from_index(-0.5, 2.0, Boundary::Absorbing).unwrap();
    let mut group = c.benchmark_group("sqb_path_128");
    for scheme in [Scheme::SeqFht, Scheme::BridgeFht, Scheme::SeqAbs] {
        let asset = SqbAsset {
            params,
            grid: grid.clone(),
            scheme,
            x0: 1.0,
        };
        group.bench_function(BenchmarkId::from_parameter(scheme.name()), |b| run(b, &asset));
    }
    group.finish();
}

fn models(c: &mut Criterion) {
    let grid = TimeGrid::uniform(0.5, 128).unwrap();
    let cev = CevAsset {
        sampler: reference_cev()
            .unwrap()
            .sampler(&grid, Scheme::SeqFht, CevApproach::CirReduction)
            .unwrap(),
        f0: 100.0,
    };
    let bk = ExactSampler::new(reference_bessel_k().unwrap(), grid, Scheme::SeqFht, 100.0).unwrap();
    let mut group = c.benchmark_group("model_path_128");
    group.bench_function("cev", |b| run(b, &cev));
    group.bench_function("bessel_k", |b| run(b, &bk));

    // Same CEV path driven by one quasi-random point.
    let u: Vec<f64> = (0..cev.dimensions()).map(|k| ((k as f64 + 0.5) * 0.618_034).fract()).collect();
    let mut out = vec![0.0; cev.grid().len()];
    group.bench_function("cev_qmc_point", |b| {
        b.iter(|| {
            let mut src = QmcPoint::new(&u);
            cev.sample(&mut src, &mut out).unwrap().fht
        })
    });
    group.finish();
}

criterion_group!(benches, sqb_schemes, models);
criterion_main!(benches);
