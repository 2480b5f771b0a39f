//! Fit and scoring costs on synthetic listing data of realistic size.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lanehouse::eval::{mse, r_squared};
use lanehouse::ingest::{build_design_matrix, clean, FeatureSchema};
use lanehouse::models::{fit_lasso, fit_mlr, fit_ridge, lambda_max};
use lanehouse::synth::{synthesize, SynthSpec};
use lanehouse::trees::{fit_forest, fit_tree, ForestParams, TreeParams};
use lanehouse::{DesignMatrix, FitConfig};

fn listings(rows: usize) -> DesignMatrix {
    let raw = synthesize(&SynthSpec {
        rows,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let schema = FeatureSchema::default();
    let (t, _) = clean(&raw, &schema, None).unwrap();
    build_design_matrix(&t, &schema).unwrap()
}

fn linear(c: &mut Criterion) {
    let d = listings(2000);
    let mut g = c.benchmark_group("linear");
    g.bench_function("mlr", |b| b.iter(|| fit_mlr(black_box(&d)).unwrap()));
    let ridge = FitConfig {
        lambda: 10.0,
        ..Default::default()
    };
    g.bench_function("ridge", |b| b.iter(|| fit_ridge(black_box(&d), &ridge).unwrap()));
    let lmax = lambda_max(&d, true);
    for frac in [0.001, 0.1] {
        let cfg = FitConfig {
            lambda: frac * lmax,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::new("lasso", frac), &cfg, |b, cfg| {
            b.iter(|| fit_lasso(black_box(&d), cfg).unwrap())
        });
    }
    g.finish();
}

fn trees(c: &mut Criterion) {
    let d = listings(2000);
    let mut g = c.benchmark_group("trees");
    g.sample_size(10);
    g.bench_function("tree_depth5", |b| {
        b.iter(|| fit_tree(black_box(&d), TreeParams::default(), None, None).unwrap())
    });
    let params = ForestParams {
        n_estimators: 20,
        ..Default::default()
    };
    g.bench_function("forest_20", |b| b.iter(|| fit_forest(black_box(&d), &params).unwrap()));
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let y: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin() * 5000.0 + 9000.0).collect();
    let yhat: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, v)| v + (i % 17) as f64 * 40.0 - 300.0)
        .collect();
    let mut g = c.benchmark_group("metrics");
    g.bench_function("mse_10k", |b| b.iter(|| mse(black_box(&y), black_box(&yhat)).unwrap()));
    g.bench_function("r2_10k", |b| {
        b.iter(|| r_squared(black_box(&y), black_box(&yhat)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, linear, trees, metrics);
criterion_main!(benches);
