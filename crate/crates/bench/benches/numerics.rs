use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use carleman_lab::coords::apply_cartesian_operator;
use carleman_lab::extension::{homogeneous_solution, ExtensionProfile};
use carleman_lab::inequalities::{carleman_sides, ChartData, ChartResolution, Family, TestFunctionSpec};
use carleman_lab::spectrum::{kernel_bound_constant, sturm_liouville_spectrum};
use carleman_lab::weights::turning_point;
use carleman_lab::{FractionalParams, HalfPlaneGrid};

fn spectrum(c: &mut Criterion) {
    c.bench_function("sturm_liouville_4000", |b| b.iter(|| sturm_liouville_spectrum(black_box(0.3), 6, 4000).unwrap()));
}

fn profile(c: &mut Criterion) {
    c.bench_function("extension_profile", |b| b.iter(|| ExtensionProfile::new(black_box(2.5), 0.3).unwrap()));
}

fn operator(c: &mut Criterion) {
    let params = FractionalParams::new(0.3).unwrap();
    let grid = Arc::new(HalfPlaneGrid::half_ball(1.0, 128, 64, &params).unwrap());
    let w = homogeneous_solution(3, &params, grid).unwrap();
    c.bench_function("cartesian_operator_128x64", |b| b.iter(|| apply_cartesian_operator(black_box(&w), &params).unwrap()));
}

fn carleman(c: &mut Criterion) {
    let params = FractionalParams::new(0.5).unwrap();
    let spec = TestFunctionSpec::new(Family::RandomBump, 0.125, 0.9, 2, 1).unwrap();
    let w = spec.build(&params).unwrap();
    c.bench_function("chart_data_default", |b| {
        b.iter(|| ChartData::from_field(&w, spec.inner, spec.outer, &params, ChartResolution::default()).unwrap())
    });
    let data = ChartData::from_field(&w, spec.inner, spec.outer, &params, ChartResolution::default()).unwrap();
    c.bench_function("carleman_sides", |b| b.iter(|| carleman_sides(&data, black_box(8.0), &params).unwrap()));
}

fn kernel(c: &mut Criterion) {
    let (mu, tau) = (16.0, 16.0);
    let turn = turning_point(mu, tau).unwrap();
    let ts: Vec<f64> = (0..200).map(|i| turn - 4.0 + 8.0 * i as f64 / 199.0).collect();
    c.bench_function("kernel_bound_200x200", |b| b.iter(|| kernel_bound_constant(mu, tau, black_box(&ts)).unwrap()));
}

criterion_group!(benches, spectrum, profile, operator, carleman, kernel);
criterion_main!(benches);
