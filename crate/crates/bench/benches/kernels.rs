use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entdist::certificate::{build_certificate, verify_dual_feasibility};
use entdist::linalg::{herm_eig, psd_project};
use entdist::random::{random_hermitian, random_spectrum, seeded_rng};
use entdist::sdp::{solve_primal_ppt, SdpProblem, SolverOptions};
use entdist::states::{build_ensemble, weyl_basis};
use std::hint::black_box;

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("herm_eig");
    for n in [16, 81, 256] {
        let m = random_hermitian(n, &mut seeded_rng(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| herm_eig(black_box(m)).unwrap())
        });
    }
    group.finish();

    let m = random_hermitian(81, &mut seeded_rng(1));
    c.bench_function("psd_project/81", |b| {
        b.iter(|| psd_project(black_box(&m)).unwrap())
    });
}

fn certificate(c: &mut Criterion) {
    let mut group = c.benchmark_group("certificate_verify");
    group.sample_size(10);
    for d in [2, 3, 4] {
        let basis = weyl_basis(d).unwrap();
        let spec = random_spectrum(d, &mut seeded_rng(d as u64));
        let cert = build_certificate(&basis, &spec).unwrap();
        let ens = build_ensemble(&basis, &spec, d * d).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| verify_dual_feasibility(&cert, &ens, 1e-9).unwrap())
        });
    }
    group.finish();
}

/// Fixed iteration counts so the timing reflects per-iteration cost.
fn sdp(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdp_100_iterations");
    group.sample_size(10);
    for d in [2, 3] {
        let basis = weyl_basis(d).unwrap();
        let spec = random_spectrum(d, &mut seeded_rng(7));
        let ens = build_ensemble(&basis, &spec, d * d).unwrap();
        let problem = SdpProblem::from_ensemble(&ens).unwrap();
        let options = SolverOptions {
            accuracy: f64::MIN_POSITIVE,
            max_iterations: 100,
            ..SolverOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(d), &problem, |b, p| {
            b.iter(|| solve_primal_ppt(p, &options).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, eigen, certificate, sdp);
criterion_main!(benches);
