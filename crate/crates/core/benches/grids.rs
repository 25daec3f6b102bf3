use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use rankone::exec::Exec;
use rankone::lorentz::NaGrid;
use rankone::measure::{QuadratureSpec, Space};
use rankone::model::{NbarPoint, SpectralParam};
use rankone::transforms::{poisson_psi, BoundaryFunction, PoissonModes};

fn grid_sweeps(c: &mut Criterion) {
    let s = Space::h2();
    let q = QuadratureSpec::default();
    let lambda = SpectralParam::real(1.0);
    let grid = NaGrid::new(8.0, -6.0, 6.0, 0.2, 0.2);
    let cells = grid.cells(&s);
    let modes = PoissonModes::build(&s, lambda, 3, 20.0, 1.0 / 32.0, &q).unwrap();
    let coeffs: Vec<(i64, Complex64)> = (-3..=3)
        .map(|k| (k, Complex64::new(1.0, 0.5) / (1.0 + k as f64).abs()))
        .collect();

    let mut g = c.benchmark_group("mode_table_cells");
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| {
                b.iter(|| {
                    exec.map(&cells, |(x, _)| {
                        modes.evaluate(&s, &coeffs, x).unwrap().norm()
                    })
                })
            },
        );
    }
    g.finish();

    let one = BoundaryFunction::one(&s, lambda);
    let points: Vec<_> = (0..16)
        .map(|i| rankone::model::XPointNA::new(NbarPoint::from_v(&[0.3 * i as f64]), 0.5))
        .collect();
    let mut g = c.benchmark_group("poisson_points");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| {
                b.iter(|| {
                    exec.map(&points, |x| {
                        black_box(poisson_psi(&s, &one, lambda, x, &q).unwrap())
                    })
                })
            },
        );
    }
    g.finish();
}

criterion_group!(benches, grid_sweeps);
criterion_main!(benches);
