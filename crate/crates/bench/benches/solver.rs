use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regpath::catalog;
use regpath::oracle;
use regpath::{solve, Schedule, SolveConfig, Vector};
use std::hint::black_box;

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_10k_evals");
    let cfg = SolveConfig { max_evals: 10_000, ..Default::default() };
    let schedule = Schedule::sqrt();
    for name in ["skew-rotation-2d", "affine-10d", "huber-10d", "max-coords-3d"] {
        let f = catalog::fixture(name).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &f, |b, f| {
            b.iter(|| solve(f.op.as_ref(), black_box(&f.x0), &schedule, &cfg).unwrap())
        });
    }
    group.finish();
}

fn reference(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolvent");
    for name in ["affine-10d", "quadratic-norm-4d", "quadratic-max-4d"] {
        let f = catalog::fixture(name).unwrap();
        let w = Vector::from_element(f.op.dim(), 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(name), &f, |b, f| {
            b.iter(|| oracle::resolvent(f.op.as_ref(), black_box(10.0), &w).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, engine, reference);
criterion_main!(benches);
