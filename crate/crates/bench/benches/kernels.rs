use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fplap_bench::{fixture, line_grid, reference_params, square_grid};
use fplap_core::{apply_flap, estimate_sobolev_constant, run, seminorm_p, SimConfig, SobolevOptions, TimeOptions};

fn operator(c: &mut Criterion) {
    let params = reference_params();
    let mut group = c.benchmark_group("apply_flap");
    for n in [64, 128, 256] {
        let (ctx, u) = fixture(&line_grid(n), &params);
        group.bench_with_input(BenchmarkId::new("1d", n), &n, |b, _| b.iter(|| apply_flap(black_box(&u), &ctx)));
    }
    for n in [12, 24] {
        let (ctx, u) = fixture(&square_grid(n), &params);
        group.bench_with_input(BenchmarkId::new("2d", n), &n, |b, _| b.iter(|| apply_flap(black_box(&u), &ctx)));
    }
    group.finish();

    let mut group = c.benchmark_group("seminorm_p");
    for p in [2.0, 3.0] {
        let mut params = reference_params();
        params.p = p;
        params.q = p + 1.0;
        let (ctx, u) = fixture(&line_grid(128), &params);
        group.bench_with_input(BenchmarkId::new("1d-128", p), &p, |b, _| b.iter(|| seminorm_p(black_box(&u), &ctx)));
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let params = reference_params();
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);
    let grid = line_grid(64);
    let opts = SobolevOptions { starts: 4, ..Default::default() };
    group.bench_function("sobolev-1d-64", |b| b.iter(|| estimate_sobolev_constant(&grid, &params, &opts)));
    let (_, u) = fixture(&grid, &params);
    let cfg = SimConfig::new(params.clone(), u.scaled(0.5), TimeOptions::adaptive(0.1));
    group.bench_function("heun-1d-64", |b| b.iter(|| run(black_box(&cfg))));
    group.finish();
}

criterion_group!(benches, operator, solvers);
criterion_main!(benches);
