use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roughdrive_core::fields::cov_v_trace;
use roughdrive_core::kernel::build_table;
use roughdrive_core::sampler::{build_cov, cholesky_sample, TimeGrid};
use roughdrive_core::spde::{simulate_coupled, simulate_linear, GridConfig};
use roughdrive_core::{derive_params, make_drift_pair, GFn};

fn bench_kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    g.sample_size(10);
    g.bench_function("build_table_a53_res1001", |b| {
        b.iter(|| build_table(5.0 / 3.0, 1001).unwrap())
    });
    let table = build_table(5.0 / 3.0, 2001).unwrap();
    g.bench_function("density_eval", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..1000 {
                acc += table.density(0.7, i as f64 * 0.05).unwrap();
            }
            acc
        })
    });
    g.finish();
}

fn bench_sampler(c: &mut Criterion) {
    let p = derive_params(0.25, 0.0, 1.0).unwrap();
    let pts: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
    let grid = TimeGrid::new(pts).unwrap();
    let cov = build_cov(|s, t| cov_v_trace(s, t, &p).unwrap(), &grid).unwrap();
    let mut g = c.benchmark_group("sampler");
    g.sample_size(10);
    g.bench_function("cholesky_sample_64pt_1000rep", |b| {
        b.iter(|| cholesky_sample(&cov, &grid, 7, 1000, "v").unwrap())
    });
    g.finish();
}

fn bench_spde(c: &mut Criterion) {
    let mut g = c.benchmark_group("spde");
    g.sample_size(10);
    for n in [256usize, 1024] {
        let cfg = GridConfig::new(8.0, n, 1.0 / 256.0, 64, vec![0.25]).unwrap();
        let p = derive_params(0.25, 1.0, cfg.horizon()).unwrap();
        g.bench_with_input(BenchmarkId::new("linear_64steps_10rep", n), &cfg, |b, cfg| {
            b.iter(|| simulate_linear(cfg, &p, 3, 10).unwrap())
        });
        let drift = make_drift_pair(GFn::Sin, &p);
        g.bench_with_input(BenchmarkId::new("coupled_sin_64steps_10rep", n), &cfg, |b, cfg| {
            b.iter(|| simulate_coupled(cfg, &p, &drift, 3, 10).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_kernel, bench_sampler, bench_spde);
criterion_main!(benches);
