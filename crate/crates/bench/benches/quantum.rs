use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use scatterlab_core::quantum::{
    coherent_data, free_propagate, poisson_free, propagate_window, Fourier, Grid, SolverParams,
};
use scatterlab_core::{PerturbationSpec, PotentialTerm};

fn bench_fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fourier");
    for n in [1024usize, 4096, 16384] {
        let grid = Grid::new(1, n, 60.0).unwrap();
        let fourier = Fourier::new(&grid);
        let mut data: Vec<Complex64> = (0..n).map(|j| Complex64::new((j as f64).sin(), 0.0)).collect();
        group.bench_with_input(BenchmarkId::new("forward+inverse 1d", n), &n, |b, _| {
            b.iter(|| {
                fourier.forward(black_box(&mut data));
                fourier.inverse(black_box(&mut data));
            })
        });
    }
    let grid = Grid::new(2, 256, 30.0).unwrap();
    let f = coherent_data(&grid, &[0.5, 0.0], &[0.0, 0.0], 0.5).unwrap();
    let u = poisson_free(&f, -1.0);
    group.bench_function("free propagate 2d 256^2", |b| b.iter(|| free_propagate(black_box(&u), 1.0)));
    group.finish();
}

/// One unit of in-window time, so the numbers read as cost per unit time at the given dt.
fn bench_window(c: &mut Criterion) {
    let mut group = c.benchmark_group("window");
    group.sample_size(10);
    let metric = PerturbationSpec::single_bump(1, 0.05, 2.0, 1.0);
    let potential = PerturbationSpec::flat(1).with_potential(PotentialTerm::new(
        Complex64::new(0.5, 0.0),
        vec![0.0],
        0.0,
        3.0,
        1.0,
    ));
    for (label, spec) in [("crank-nicolson metric", &metric), ("crank-nicolson potential", &potential)] {
        let grid = Grid::new(1, 2048, 40.0).unwrap();
        let f = coherent_data(&grid, &[0.5], &[0.0], 0.5).unwrap();
        let u = poisson_free(&f, -0.5);
        let params = SolverParams::with_dt(1e-3);
        group.bench_function(label, |b| {
            b.iter(|| propagate_window(spec, black_box(u.clone()), 0.5, &params).unwrap())
        });
    }
    let spec2 = PerturbationSpec::single_bump(2, 0.05, 2.0, 1.0);
    let grid = Grid::new(2, 64, 16.0).unwrap();
    let f = coherent_data(&grid, &[0.5, 0.0], &[0.0, 0.0], 0.5).unwrap();
    let u = poisson_free(&f, -0.5);
    let params = SolverParams::with_dt(1e-2);
    group.bench_function("strang 2d 64^2", |b| {
        b.iter(|| propagate_window(&spec2, black_box(u.clone()), 0.5, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_fft, bench_window);
criterion_main!(benches);
