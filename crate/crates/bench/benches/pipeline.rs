//! Benchmarks for the hot paths: forward projection, PSNR pooling, Wiener
//! training, tree fitting and forest prediction.
//!
//! Run with `cargo bench -p specdemux-bench`.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use specdemux::forest::{forest_predict, forest_train, tree_fit, ForestConfig};
use specdemux::metrics::psnr;
use specdemux::wiener::{wiener_predict, wiener_train, DEFAULT_RIDGE};
use specdemux::{forward_measure, Spectrum};
use specdemux_bench::{dataset_fixture, spectra_fixture};

fn bench_forward(c: &mut Criterion) {
    let (sens, spectra) = spectra_fixture(1, 1);
    c.bench_function("forward_measure 61pt x3", |b| {
        b.iter(|| forward_measure(black_box(&spectra[0]), black_box(&sens)).unwrap())
    });
}

fn bench_psnr(c: &mut Criterion) {
    let (_, truth) = spectra_fixture(500, 2);
    let (_, pred) = spectra_fixture(500, 3);
    c.bench_function("psnr 500x61", |b| {
        b.iter(|| psnr(black_box(&truth), black_box(&pred), 1.0).unwrap())
    });
}

fn bench_wiener(c: &mut Criterion) {
    let ds = dataset_fixture(2000, 4);
    c.bench_function("wiener_train 2000 pairs", |b| {
        b.iter(|| wiener_train(black_box(&ds), DEFAULT_RIDGE).unwrap())
    });
    let model = wiener_train(&ds, DEFAULT_RIDGE).unwrap();
    let probe = ds.pairs()[0].1.clone();
    c.bench_function("wiener_predict", |b| {
        b.iter(|| wiener_predict(black_box(&model), black_box(&probe), false).unwrap())
    });
}

fn bench_tree(c: &mut Criterion) {
    let ds = dataset_fixture(2000, 5);
    let inputs: Vec<_> = ds.pairs().iter().map(|(_, m)| m.clone()).collect();
    let targets: Vec<f64> = ds.pairs().iter().map(|(lam, _)| lam.value(30)).collect();
    c.bench_function("tree_fit 2000 samples depth 14", |b| {
        b.iter_batched(
            || (inputs.clone(), targets.clone()),
            |(inputs, targets)| tree_fit(&inputs, &targets, 14, 2).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_forest(c: &mut Criterion) {
    let ds = dataset_fixture(300, 6);
    let cfg = ForestConfig::new(2 * ds.grid().count(), 7);
    c.bench_function("forest_train 300 pairs 122 trees", |b| {
        b.iter(|| forest_train(black_box(&ds), black_box(&cfg)).unwrap())
    });
    let model = forest_train(&ds, &cfg).unwrap();
    let probe = ds.pairs()[0].1.clone();
    c.bench_function("forest_predict", |b| {
        b.iter(|| {
            let s: Spectrum = forest_predict(black_box(&model), black_box(&probe)).unwrap();
            s
        })
    });
}

criterion_group!(
    benches,
    bench_forward,
    bench_psnr,
    bench_wiener,
    bench_tree,
    bench_forest
);
criterion_main!(benches);
