//! Sequential vs rayon execution of the data-parallel loops.
//!
//! Build with `--no-default-features` to measure the sequential fallback
//! where both variants run on one thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pecok::experiment::{self, ExperimentConfig, Method};
use pecok::gamma::estimate_gamma_main_with;
use pecok::kmeans::kmeans;
use pecok::model::sample;
use pecok::{Execution, KmeansOptions, ModelSpec, Partition, SdpOptions};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn gamma_tables(c: &mut Criterion) {
    let model = ModelSpec::identity_blocks(Partition::equal(4, 10).unwrap(), 1.0).unwrap();
    let x = sample(&model, 400, 1).unwrap();
    let mut group = c.benchmark_group("gamma_main");
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| estimate_gamma_main_with(&x, exec).unwrap())
        });
    }
    group.finish();
}

fn kmeans_restarts(c: &mut Criterion) {
    let model = ModelSpec::identity_blocks(Partition::equal(5, 20).unwrap(), 2.0).unwrap();
    let points = sample(&model, 50, 2).unwrap().into_inner().transpose();
    let mut group = c.benchmark_group("kmeans_20_restarts");
    for exec in MODES {
        let opts = KmeansOptions {
            execution: exec,
            ..KmeansOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &opts, |b, opts| {
            b.iter(|| kmeans(&points, 5, 3, opts).unwrap())
        });
    }
    group.finish();
}

fn phase_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase_grid");
    group.sample_size(10);
    for exec in MODES {
        let config = ExperimentConfig {
            n: vec![100],
            k: vec![3],
            m: vec![5],
            tau_multipliers: vec![5.0, 20.0],
            methods: vec![Method::Pecok, Method::Csc],
            replicates: 4,
            solver: SdpOptions::default().with_tolerance(1e-5),
            execution: exec,
            ..ExperimentConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &config, |b, cfg| {
            b.iter(|| experiment::run(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gamma_tables, kmeans_restarts, phase_grid);
criterion_main!(benches);
