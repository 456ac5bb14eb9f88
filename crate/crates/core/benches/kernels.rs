//! Parallel kernels against a one-thread pool. Build with
//! `--no-default-features` to bench the plain-iterator fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;

use spe_core::dynamics::{nonlinear_q, Mode, QMethod};
use spe_core::ensemble::run_trajectories;
use spe_core::stochastic::{NoiseKind, NoiseModel};
use spe_core::verify::lemmas::{sweep, Estimate, SweepParams};
use spe_core::verify::sampling::FieldSampler;
use spe_core::verify::suite::reference_setup;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("default", ThreadPoolBuilder::new().build().unwrap()),
        ("one_thread", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
    ]
}

fn bench_q(c: &mut Criterion) {
    let mut g = c.benchmark_group("nonlinear_q");
    for n in [4, 8] {
        let s = FieldSampler::new(0.3, 1.0);
        let f = s.vector(n, 1, true);
        let h = s.vector(n, 2, true);
        for (name, pool) in pools() {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                pool.install(|| b.iter(|| nonlinear_q(&f, &h, QMethod::Pseudospectral).unwrap()))
            });
        }
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("lemma_a1_sweep");
    g.sample_size(10);
    let sp = SweepParams { tau: 0.1, gamma: 0.05, r: 2.6, samples: 64, seed: 1 };
    for (name, pool) in pools() {
        g.bench_function(name, |b| pool.install(|| b.iter(|| sweep(Estimate::LemmaA1, 4, &sp).unwrap())));
    }
    g.finish();
}

fn bench_ensemble(c: &mut Criterion) {
    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    let setup = reference_setup(Mode::Inviscid, 1.0, NoiseModel::uniform(NoiseKind::Multiplicative, 4, 0.3)).unwrap();
    let v0 = FieldSampler::new(0.6, 1.0).vector(4, 1, true);
    let v0 = v0.scaled(0.5 / setup.dynamics.active_norm(&v0, 0.0).unwrap());
    for (name, pool) in pools() {
        g.bench_function(name, |b| pool.install(|| b.iter(|| run_trajectories(&setup, &v0, 7, 16, None))));
    }
    g.finish();
}

criterion_group!(benches, bench_q, bench_sweep, bench_ensemble);
criterion_main!(benches);
