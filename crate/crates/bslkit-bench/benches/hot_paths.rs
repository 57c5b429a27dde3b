//! Criterion benchmarks for the hot paths: likelihood evaluation, the
//! stable-displacement sampler, and the toad summary pipeline.

use bslkit::model::SimulatorModel;
use bslkit::models::ma2::Ma2Model;
use bslkit::models::stable::levy_stable_sample;
use bslkit::models::toad::ToadModel;
use bslkit::rng::RngStream;
use bslkit::synlik::{estimated_log_synlik, log_synlik, CovarianceSpec};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::{DMatrix, DVector};
use std::hint::black_box;

fn bench_log_synlik(c: &mut Criterion) {
    let d = 20;
    let mean = DVector::from_element(d, 0.5);
    let s_obs = DVector::from_element(d, 0.6);
    let mut cov = DMatrix::identity(d, d);
    for i in 0..d - 1 {
        cov[(i, i + 1)] = 0.2;
        cov[(i + 1, i)] = 0.2;
    }
    c.bench_function("log_synlik_d20", |b| {
        b.iter(|| log_synlik(black_box(&s_obs), black_box(&mean), black_box(&cov)))
    });
}

fn bench_estimated_log_synlik_ma2(c: &mut Criterion) {
    let model = Ma2Model::new(1000);
    let theta = DVector::from_vec(vec![0.6, 0.2]);
    let s_obs = model
        .simulate_summary(&theta, &mut RngStream::root(1).rng())
        .unwrap();
    c.bench_function("estimated_log_synlik_ma2_m200", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            estimated_log_synlik(
                &model,
                black_box(&theta),
                200,
                CovarianceSpec::Full,
                &s_obs,
                RngStream::new(7, i),
            )
            .unwrap()
        })
    });
}

fn bench_stable_sampler(c: &mut Criterion) {
    c.bench_function("levy_stable_10k", |b| {
        b.iter_batched(
            || RngStream::root(3).rng(),
            |mut rng| {
                for _ in 0..10_000 {
                    black_box(levy_stable_sample(1.7, 35.0, &mut rng).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_toad_summary(c: &mut Criterion) {
    let model = ToadModel::default();
    let theta = DVector::from_vec(vec![1.7, 35.0, 0.6]);
    c.bench_function("toad_simulate_and_summarize", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            model
                .simulate_summary(black_box(&theta), &mut RngStream::new(5, i).rng())
                .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_log_synlik,
    bench_estimated_log_synlik_ma2,
    bench_stable_sampler,
    bench_toad_summary
);
criterion_main!(benches);
