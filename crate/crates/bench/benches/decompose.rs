use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use quasipure_core::numeric::{
    density_from_ensemble, partial_transpose_min_eig, verify_decomposition, Caps, DEFAULT_DENSE_CAP,
};
use quasipure_core::{canonical_mixture, decompose, entanglement};

fn symbolic(c: &mut Criterion) {
    c.bench_function("decompose(6, 6)", |b| {
        b.iter(|| decompose(black_box(6), black_box(6)).unwrap())
    });
    c.bench_function("decompose(60, 48)", |b| {
        b.iter(|| decompose(black_box(60), black_box(48)).unwrap())
    });
    c.bench_function("entanglement(360, 1000)", |b| {
        b.iter(|| entanglement(black_box(360), black_box(1000)).unwrap())
    });
}

fn numeric(c: &mut Criterion) {
    let caps = Caps::default();
    let tree = decompose(3, 3).unwrap();
    c.bench_function("verify_decomposition(3, 3)", |b| {
        b.iter(|| verify_decomposition(3, 3, black_box(&tree), &caps).unwrap())
    });
    let rho = density_from_ensemble(&canonical_mixture(3, 2).unwrap(), DEFAULT_DENSE_CAP).unwrap();
    c.bench_function("partial transpose eigensolve (3, 2)", |b| {
        b.iter(|| partial_transpose_min_eig(black_box(&rho), DEFAULT_DENSE_CAP).unwrap())
    });
}

criterion_group!(benches, symbolic, numeric);
criterion_main!(benches);
