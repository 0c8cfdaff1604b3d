//! Parallel-vs-sequential throughput on the two data-parallel workloads:
//! batch scenario integration (the sweep/compare engine) and quadrature
//! rate-table construction.
//!
//! Built with the default `parallel` feature, `map_collect` fans out over
//! rayon while `map_collect_seq` is the single-thread baseline; built with
//! `--no-default-features` both are sequential and should coincide.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use tclsim::batch;
use tclsim::dynamics::integrate;
use tclsim::model::{build_scenario, Mode, Regime, Scenario};
use tclsim::rates::rate_quadrature;
use tclsim::spectral::{normalization_for_target_rate, SpectralDensity};

fn preset_batch() -> Vec<Scenario> {
    let mut scenarios = Vec::new();
    for regime in [Regime::Overdamped, Regime::Underdamped, Regime::Intermediate] {
        for mode in [Mode::NonMarkovian, Mode::Markovian] {
            let mut sc = build_scenario(regime, mode, &[]).unwrap();
            sc.horizon_fs = 300.0;
            scenarios.push(sc);
        }
    }
    scenarios
}

fn bench_scenario_batch(c: &mut Criterion) {
    let scenarios = preset_batch();
    let mut group = c.benchmark_group("scenario_batch_6x300fs");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let out = batch::map_collect(black_box(&scenarios), |sc| integrate(sc).unwrap());
            black_box(out)
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let out = batch::map_collect_seq(black_box(&scenarios), |sc| integrate(sc).unwrap());
            black_box(out)
        })
    });
    group.finish();
}

fn bench_rate_table(c: &mut Criterion) {
    let gamma = 0.02;
    let kappa = 0.01;
    let norm = normalization_for_target_rate(gamma, kappa).unwrap();
    let density = SpectralDensity::lorentzian(1.0, kappa, norm).unwrap();
    let times: Vec<f64> = (0..96).map(|k| 5.0 * k as f64).collect();

    let mut group = c.benchmark_group("rate_table_96pts");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let out = batch::map_collect(black_box(&times), |&t| {
                rate_quadrature(t, &density, density.center_omega0, 1e-6).unwrap()
            });
            black_box(out)
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let out = batch::map_collect_seq(black_box(&times), |&t| {
                rate_quadrature(t, &density, density.center_omega0, 1e-6).unwrap()
            });
            black_box(out)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_scenario_batch, bench_rate_table);
criterion_main!(benches);
