use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ncfield::{
    build_symplectic_structure, evolve_deformed, evolve_dressed, solve_dressing, spectrum_table,
    verify_deformed_commutators, DeformationParams, EvolutionConfig, ModeSet, VerifyOptions,
};
use ncfield_bench::fixture_state;

fn structure(c: &mut Criterion) {
    let p = DeformationParams::new(0.5, 0.3);
    c.bench_function("build_symplectic_structure", |b| {
        b.iter(|| build_symplectic_structure(black_box(&p)).unwrap())
    });
    c.bench_function("solve_dressing", |b| b.iter(|| solve_dressing(black_box(&p)).unwrap()));
}

fn spectrum(c: &mut Criterion) {
    let p = DeformationParams::new(0.5, 0.3);
    let k = solve_dressing(&p).unwrap();
    c.bench_function("spectrum_table_64", |b| b.iter(|| spectrum_table(&p, &k, black_box(64))));
    let modes = ModeSet::new(4).unwrap();
    c.bench_function("verify_commutators_nmax4", |b| {
        b.iter(|| verify_deformed_commutators(&p, &k, modes, VerifyOptions::default()).unwrap())
    });
}

fn evolution(c: &mut Criterion) {
    let p = DeformationParams::new(0.5, 0.5);
    let s = fixture_state(7, 4);
    let cfg = EvolutionConfig {
        dt: 1e-3,
        t_final: 1.0,
        sample_stride: 100,
        ..EvolutionConfig::default()
    };
    let mut group = c.benchmark_group("evolve_nmax4_t1");
    group.bench_function("deformed_rk4", |b| b.iter(|| evolve_deformed(black_box(&s), &p, &cfg).unwrap()));
    group.bench_function("dressed_closed_form", |b| b.iter(|| evolve_dressed(black_box(&s), &p, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, structure, spectrum, evolution);
criterion_main!(benches);
