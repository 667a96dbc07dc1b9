use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use g2flow::deturck::q_tilde;
use g2flow::energy::gradient_q;
use g2flow::exterior::Form;
use g2flow::flow::FlowRunner;
use g2flow::g2::PointStructure;
use g2flow::g2::standard::normal_form;
use g2flow::g2::G2Structure;
use g2flow::symbol::symbol_deturck;
use g2flow::{FlowConfig, StructureField};
use g2flow_bench::perturbed;
use std::hint::black_box;

fn point(c: &mut Criterion) {
    let omega = normal_form();
    c.bench_function("point_structure", |b| b.iter(|| PointStructure::new(black_box(omega.coeffs())).unwrap()));
    let s = G2Structure::standard();
    let xi = Form::basis(&[7]);
    c.bench_function("symbol_deturck", |b| b.iter(|| symbol_deturck(black_box(&s), &xi).unwrap()));
}

fn fields(c: &mut Criterion) {
    let s = perturbed(16);
    let omega = s.omega().clone();
    let bar = StructureField::flat(s.grid(), &normal_form()).unwrap();
    c.bench_function("structure_field_16x16", |b| {
        b.iter_batched(|| omega.clone(), |f| StructureField::new(f).unwrap(), BatchSize::SmallInput)
    });
    c.bench_function("gradient_q_16x16", |b| b.iter(|| gradient_q(black_box(&s)).unwrap()));
    c.bench_function("q_tilde_16x16", |b| b.iter(|| q_tilde(&bar, black_box(&s)).unwrap()));
}

fn flow_step(c: &mut Criterion) {
    let s = perturbed(16);
    let mut group = c.benchmark_group("flow");
    group.sample_size(10);
    group.bench_function("deturck_step_16x16", |b| {
        b.iter_batched(
            || FlowRunner::new(s.clone(), FlowConfig::default()).unwrap(),
            |mut r| r.step().unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, point, fields, flow_step);
criterion_main!(benches);
