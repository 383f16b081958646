use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use illposed::asc::distance_curve;
use illposed::grid::log_space;
use illposed::ops::build_svd_operator;
use illposed::problems::{add_noise, deriv2_matrix, make_diagonal_model};
use illposed::regularizers::{geometric_checkpoints, landweber_at, tikhonov, ProjectedData};
use nalgebra::DMatrix;
use std::hint::black_box;

fn tikhonov_sweep(c: &mut Criterion) {
    let p = make_diagonal_model(5000, 2.0, 2.0, 0).unwrap();
    let y = add_noise(&p, 0.001, 1).unwrap().y_delta;
    let grid = log_space(1e-12, 1.0, 100);
    c.bench_function("tikhonov_sweep_n5000_100alphas", |b| {
        b.iter(|| {
            for &a in &grid {
                black_box(tikhonov(&p, &y, a, 0).unwrap());
            }
        })
    });
}

fn distance(c: &mut Criterion) {
    let p = make_diagonal_model(5000, 2.0, 2.0, 0).unwrap();
    let grid = log_space(2.0, 40.0, 40);
    c.bench_function("distance_curve_n5000_40radii", |b| {
        b.iter(|| black_box(distance_curve(p.op(), p.x_true(), 0.5, 0.5, &grid).unwrap()))
    });
}

fn landweber(c: &mut Criterion) {
    let p = make_diagonal_model(5000, 2.0, 2.0, 0).unwrap();
    let y = add_noise(&p, 0.001, 1).unwrap().y_delta;
    let ks = geometric_checkpoints(50_000, 24);
    c.bench_function("landweber_closed_form_n5000", |b| {
        b.iter(|| black_box(landweber_at(&p, &y, 1.0, &ks, None, true).unwrap()))
    });
}

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_svd_operator");
    for n in [64, 256] {
        let symmetric = deriv2_matrix(n);
        let general = DMatrix::from_fn(n, n, |i, j| {
            symmetric[(i, j)] * (1.0 + 0.01 * (i as f64 - j as f64))
        });
        group.bench_with_input(BenchmarkId::new("symmetric", n), &symmetric, |b, m| {
            b.iter(|| black_box(build_svd_operator(m, false).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("general", n), &general, |b, m| {
            b.iter(|| black_box(build_svd_operator(m, false).unwrap()))
        });
    }
    group.finish();
}

fn projection(c: &mut Criterion) {
    let p = illposed::problems::make_deriv2(
        256,
        illposed::problems::Deriv2Solution::ConstantOne,
        false,
    )
    .unwrap();
    let y = add_noise(&p, 0.01, 3).unwrap().y_delta;
    c.bench_function("project_data_deriv2_n256", |b| {
        b.iter(|| black_box(ProjectedData::new(&p, &y).unwrap()))
    });
}

criterion_group!(
    benches,
    tikhonov_sweep,
    distance,
    landweber,
    svd,
    projection
);
criterion_main!(benches);
