use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use nullstring_bench::{family, field, generic_plebanski, point};
use nullstring_core::classify::{petrov, Tolerances};
use nullstring_core::curvature::{oracle_from_plebanski, plebanski_curvature};
use nullstring_core::dsl::parse;
use nullstring_core::Mode;

fn dsl(c: &mut Criterion) {
    let src = "exp(q*x)*sin(p + y^2) + (x*y - q)^3/(1 + p^2)";
    c.bench_function("dsl/parse", |b| b.iter(|| parse(black_box(src)).unwrap()));
    let f = field(src);
    let p = point();
    c.bench_function("dsl/eval_jet", |b| b.iter(|| f.eval_jet(black_box(&p)).unwrap()));
}

fn curvature(c: &mut Criterion) {
    let j = generic_plebanski().jets(&point()).unwrap();
    c.bench_function("curvature/closed_form", |b| b.iter(|| plebanski_curvature(black_box(&j))));
    c.bench_function("curvature/coordinate_oracle", |b| b.iter(|| oracle_from_plebanski(black_box(&j)).unwrap()));
}

fn classify(c: &mut Criterion) {
    let cup = plebanski_curvature(&generic_plebanski().jets(&point()).unwrap()).cup;
    let tol = Tolerances::default();
    c.bench_function("classify/petrov_real", |b| b.iter(|| petrov(black_box(&cup), Mode::Real, &tol)));
    c.bench_function("classify/petrov_complex", |b| b.iter(|| petrov(black_box(&cup), Mode::Complex, &tol)));
}

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("analyse_point");
    for id in ["walker-pk", "IIxD-ne", "pkE-D", "nxo-null"] {
        let inst = family(id);
        let p = inst.sample_points(1, inst.seed).unwrap()[0];
        g.bench_with_input(BenchmarkId::from_parameter(id), &p, |b, p| b.iter(|| inst.analyse(p).unwrap()));
    }
    g.finish();
    let inst = family("typeD-ne");
    c.bench_function("classify_20_points/typeD-ne", |b| b.iter(|| inst.classify(20, inst.seed).unwrap()));
}

criterion_group!(benches, dsl, curvature, classify, pipeline);
criterion_main!(benches);
