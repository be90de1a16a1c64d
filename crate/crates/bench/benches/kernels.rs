use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use typlab::ensembles::random_interaction;
use typlab::geometry::cap_measure_exact;
use typlab::linalg::hermitian_eig;
use typlab::states::{reduced_state, sample_uniform};
use typlab::typicality::{run_typicality, TypicalityConfig};
use typlab::{BipartiteDims, HermitianOperator, RngStream, Sampling, Subspace};

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_uniform");
    for dim in [128, 1024, 8192] {
        let mut rng = RngStream::new(1, 0);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, &dim| {
            b.iter(|| sample_uniform(dim, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduced_state");
    for (ds, db) in [(2, 64), (2, 4096), (16, 256)] {
        let dims = BipartiteDims::new(ds, db).unwrap();
        let phi = sample_uniform(dims.total(), &mut RngStream::new(2, 0)).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("ds{ds}"), db), &phi, |b, phi| {
            b.iter(|| reduced_state(black_box(phi), dims).unwrap())
        });
    }
    group.finish();
}

fn eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermitian_eig");
    group.sample_size(10);
    for dim in [16, 64, 256] {
        let h = random_interaction(dim, &mut RngStream::new(3, 0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &h, |b, h| {
            // a fresh operator per iteration, so the cached spectrum is not reused
            b.iter_batched(
                || HermitianOperator::new(h.matrix().clone()).unwrap(),
                |op| hermitian_eig(&op).unwrap().values[0],
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn typicality(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_typicality");
    group.sample_size(10);
    for db in [64, 1024] {
        let dims = BipartiteDims::new(2, db).unwrap();
        let config = TypicalityConfig {
            dims,
            subspace: Subspace::full(dims.total()).unwrap(),
            samples: 2000,
            epsilons: vec![0.1, 0.2, 0.3, 0.5],
            sampling: Sampling::new(4, 1),
        };
        group.bench_with_input(BenchmarkId::new("2000 samples", db), &config, |b, config| {
            b.iter(|| run_typicality(config).unwrap().mean_distance)
        });
    }
    group.finish();
}

fn cap_quadrature(c: &mut Criterion) {
    c.bench_function("cap_measure_exact/n=1000", |b| {
        b.iter(|| cap_measure_exact(black_box(1000), black_box(0.1)).unwrap())
    });
}

criterion_group!(benches, sampling, reduction, eigensolver, typicality, cap_quadrature);
criterion_main!(benches);
