use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nrbeam::codebooks::{designed_codebook, multi_beam_dft_codebook, total_coherence};
use nrbeam::detect::{cs_detect, exhaustive_search, omp};
use nrbeam::sweep::SweepSignal;
use nrbeam::{ArrayGeometry, GridDictionary};
use nrbeam_bench::{fixture, rng};

fn detection(c: &mut Criterion) {
    let f = fixture();
    let y = &f.measurements.y;
    c.bench_function("operator_adjoint_default", |b| {
        b.iter(|| black_box(f.operator.adjoint(black_box(y))))
    });
    c.bench_function("omp_s6_default", |b| {
        b.iter(|| black_box(omp(&f.operator, y, 6).unwrap()))
    });
    c.bench_function("cs_detect_default", |b| {
        b.iter(|| {
            black_box(cs_detect(&f.operator, y, 6, &f.tx_grid, &f.rx_grid, 64, 8, 3).unwrap())
        })
    });
    c.bench_function("exhaustive_search_default", |b| {
        b.iter(|| black_box(exhaustive_search(&f.measurements, 3).unwrap()))
    });
}

fn acquisition(c: &mut Criterion) {
    let f = fixture();
    c.bench_function("sweep_signal_build", |b| {
        b.iter(|| black_box(SweepSignal::new(&f.channel, &f.tx, &f.rx, &f.cfg).unwrap()))
    });
    let signal = SweepSignal::new(&f.channel, &f.tx, &f.rx, &f.cfg).unwrap();
    let mut r = rng(3);
    c.bench_function("sweep_measure_noisy", |b| {
        b.iter(|| black_box(signal.measure(10.0, 1.0, &mut r)))
    });
}

fn codebook_design(c: &mut Criterion) {
    let grid = GridDictionary::build(ArrayGeometry::new(128).unwrap(), 3).unwrap();
    let multi = multi_beam_dft_codebook(128, 64, 6).unwrap();
    c.bench_function("total_coherence_128", |b| {
        b.iter(|| black_box(total_coherence(&multi, &grid).unwrap()))
    });
    let mut group = c.benchmark_group("design");
    group.sample_size(10);
    group.bench_function("designed_codebook_128_one_sweep", |b| {
        b.iter(|| black_box(designed_codebook(128, 64, &grid, 6, 1, &mut rng(1)).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, detection, acquisition, codebook_design);
criterion_main!(benches);
