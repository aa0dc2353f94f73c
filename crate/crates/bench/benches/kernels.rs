use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sandwich_core::barycenter::{solve_fixed_point, solve_gradient_projection, BarycenterProblem, SolverOptions};
use sandwich_core::calculus::{gradient_f, hessian_apply, HessianOperator};
use sandwich_core::entropy::fidelity;
use sandwich_core::inequalities::{log_majorization_chain, run_suite, Suite, SuiteConfig};
use sandwich_core::linalg::{random_hermitian, random_spd_with, seeded_rng};

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for n in [4, 16, 64] {
        let mut rng = seeded_rng(n as u64);
        let a = random_spd_with(n, 1.0, 4.0, &mut rng).unwrap();
        let x = random_spd_with(n, 1.0, 4.0, &mut rng).unwrap();
        let y = random_hermitian(n, 1.0, &mut rng);
        group.bench_with_input(BenchmarkId::new("fidelity", n), &n, |bch, _| {
            bch.iter(|| fidelity(black_box(&a), black_box(&x), 0.3).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradient", n), &n, |bch, _| {
            bch.iter(|| gradient_f(black_box(&a), black_box(&x), 0.3).unwrap())
        });
        let op = HessianOperator::new(&a, &x, 0.3).unwrap();
        group.bench_with_input(BenchmarkId::new("hessian_apply", n), &n, |bch, _| {
            bch.iter(|| hessian_apply(&op, black_box(&y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("log_chain", n), &n, |bch, _| {
            bch.iter(|| log_majorization_chain(black_box(&a), black_box(&x), 0.3).unwrap())
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);
    let mut rng = seeded_rng(7);
    let ms = (0..3).map(|_| random_spd_with(8, 1.0, 4.0, &mut rng).unwrap()).collect();
    let p = BarycenterProblem::new(ms, vec![1.0, 2.0, 3.0], 0.5, Some(1.0), Some(4.0)).unwrap();
    let opts = SolverOptions::default();
    group.bench_function("gradient_projection_n8", |b| {
        b.iter(|| solve_gradient_projection(black_box(&p), &opts).unwrap())
    });
    group.bench_function("fixed_point_n8", |b| b.iter(|| solve_fixed_point(black_box(&p), &opts).unwrap()));
    group.bench_function("trace_chain_suite_100", |b| {
        let cfg = SuiteConfig::new(Suite::TraceChain, 4, 100, 1);
        b.iter(|| run_suite(black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels, solvers);
criterion_main!(benches);
