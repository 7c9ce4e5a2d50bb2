//! Sequential versus parallel execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxproc::grid_calc::{conv_grid_with, levy::levy_tail_series_with, GridFunction, ProcessParams};
use maxproc::mc_sim::{simulate, PathConfig};
use maxproc::Execution;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let p = ProcessParams::new(1.0, 1.0).unwrap();
    let cfg = PathConfig::new(1.0 / 256.0, 20.0, 1, 16).unwrap();
    let mut group = c.benchmark_group("simulate_16_paths");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| simulate(black_box(&cfg), &p, exec).unwrap())
        });
    }
    group.finish();
}

fn convolution(c: &mut Criterion) {
    let n = 4000;
    let f = GridFunction::sample(0.0, 1e-3, n, |x| (-x).exp()).unwrap();
    let g = GridFunction::sample(0.0, 1e-3, n, |x| x.sin()).unwrap();
    let mut group = c.benchmark_group("conv_grid_4000");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| conv_grid_with(black_box(&f), black_box(&g), exec).unwrap())
        });
    }
    group.finish();
}

fn levy_series(c: &mut Criterion) {
    let mut group = c.benchmark_group("levy_tail_series_dx_1_400");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| levy_tail_series_with(1.0, 1.0 / 400.0, 5.0, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, convolution, levy_series);
criterion_main!(benches);
