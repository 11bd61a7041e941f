use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dp_erm::mechanisms::{sample_gamma_laplace, sample_gaussian};
use dp_erm::optimizers::{baseline_private_sgd, gd, opgd, rrpsgd, BaselineOptions, GdConfig, RrpsgdOptions};
use dp_erm::{generate, LossKind, LossModel, PrivacyBudget, RngStream, SyntheticKind, SyntheticSpec};

fn samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("samplers");
    for d in [2usize, 20, 110] {
        group.bench_with_input(BenchmarkId::new("gamma_laplace", d), &d, |b, &d| {
            let mut rng = RngStream::new(1, 0).rng();
            b.iter(|| sample_gamma_laplace(d, 1.0, &mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gaussian", d), &d, |b, &d| {
            let mut rng = RngStream::new(1, 1).rng();
            b.iter(|| sample_gaussian(d, 1.0, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn full_gradient_methods(c: &mut Criterion) {
    let data = generate(&SyntheticSpec {
        kind: SyntheticKind::LogisticSeparable,
        n: 5000,
        d: 20,
        noise_level: 0.1,
        seed: RngStream::new(3, 0),
    })
    .unwrap();
    let model = LossModel::new(LossKind::logistic(), 0.1).unwrap();
    let mut group = c.benchmark_group("full_gradient");
    group.sample_size(20);
    group.bench_function("gd_100_steps_n5000_d20", |b| {
        let cfg = GdConfig::from_origin(GdConfig::step_limit(&model), 100, 20);
        b.iter(|| gd(&model, black_box(&data), &cfg).unwrap())
    });
    group.bench_function("opgd_eps1_n5000_d20", |b| {
        let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
        b.iter(|| opgd(&model, black_box(&data), budget, 1.0, Default::default(), RngStream::new(0, 0)).unwrap())
    });
    group.finish();
}

fn stochastic_methods(c: &mut Criterion) {
    let data = generate(&SyntheticSpec {
        kind: SyntheticKind::SigmoidNonconvex,
        n: 2000,
        d: 10,
        noise_level: 0.1,
        seed: RngStream::new(4, 0),
    })
    .unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
    let mut group = c.benchmark_group("stochastic");
    group.sample_size(20);
    group.bench_function("rrpsgd_100k_rounds_d10", |b| {
        let model = LossModel::new(LossKind::SquaredSigmoid, 0.0).unwrap();
        let opts = RrpsgdOptions {
            rounds: Some(100_000),
            ..Default::default()
        };
        b.iter(|| rrpsgd(&model, black_box(&data), budget, opts, RngStream::new(0, 0)).unwrap())
    });
    group.bench_function("baseline_2k_steps_m50_d10", |b| {
        let model = LossModel::new(LossKind::huber(), 0.1).unwrap();
        let opts = BaselineOptions {
            iterations: Some(2_000),
            ..Default::default()
        };
        let ridge = generate(&SyntheticSpec {
            kind: SyntheticKind::RidgeRegression,
            n: 2000,
            d: 10,
            noise_level: 0.1,
            seed: RngStream::new(5, 0),
        })
        .unwrap();
        b.iter(|| baseline_private_sgd(&model, black_box(&ridge), budget, 50, 1.0, opts, RngStream::new(0, 0)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, samplers, full_gradient_methods, stochastic_methods);
criterion_main!(benches);
