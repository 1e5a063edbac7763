use abelcheck::pipeline::{check_report, identity_suite};
use abelcheck::transforms::TransformField;
use abelcheck_bench::{plummer_config, quadrature, square_grid};
use criterion::{criterion_group, criterion_main, Criterion};

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    let cfg = plummer_config(16, 256);
    group.bench_function("check_plummer_16x16", |b| b.iter(|| check_report(&cfg).unwrap()));
    let model = cfg.build_model().unwrap();
    let q = quadrature(256);
    let grid = square_grid(16);
    group.bench_function("transform_field_16x16", |b| {
        b.iter(|| TransformField::compute(&q, &model, &grid).unwrap())
    });
    group.bench_function("identity_suite_16x16", |b| b.iter(|| identity_suite(&q, &grid, 1e-6).unwrap()));
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
