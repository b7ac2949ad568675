use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use qca_core::attack::{baseline_stats, simulate, solve_matching, ChannelModel, Scenario};
use qca_core::linalg::{hermitian_eig, polar_decompose, ComplexMatrix};
use qca_core::states::build_povm;

fn sample_matrix(dim: usize) -> ComplexMatrix {
    let entries = (0..dim * dim)
        .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.91).cos()))
        .collect();
    ComplexMatrix::new(dim, entries).unwrap()
}

fn linalg(c: &mut Criterion) {
    let mut group = c.benchmark_group("linalg");
    for dim in [2, 4, 8] {
        let m = sample_matrix(dim);
        let h = (&m + &m.adjoint()).scale(0.5);
        group.bench_with_input(BenchmarkId::new("hermitian_eig", dim), &h, |b, h| {
            b.iter(|| hermitian_eig(black_box(h)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("polar", dim), &m, |b, m| {
            b.iter(|| polar_decompose(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn povm(c: &mut Criterion) {
    c.bench_function("build_povm", |b| {
        b.iter(|| build_povm(black_box(0.6), black_box(0.5)).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let channel = ChannelModel {
        transmittance: 0.1,
        efficiency: 0.2,
        dark_count_prob: 1e-5,
        pulses: 1 << 18,
    };
    let base = baseline_stats(&channel, 0.5, 0.6, 0.01).unwrap();
    let strategy = solve_matching(0.6, 0.5, &base, &channel, 1.0).unwrap();
    let attack = Scenario {
        w: 0.6,
        channel,
        bob_mu: 0.5,
        intrinsic_error: 0.01,
        eve: Some(strategy),
        seed: 1,
    };
    let honest = Scenario {
        eve: None,
        ..attack
    };
    let mut group = c.benchmark_group("simulate_262144");
    group.sample_size(10);
    group.bench_function("attack", |b| {
        b.iter(|| simulate(black_box(&attack)).unwrap())
    });
    group.bench_function("honest", |b| {
        b.iter(|| simulate(black_box(&honest)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, linalg, povm, simulation);
criterion_main!(benches);
