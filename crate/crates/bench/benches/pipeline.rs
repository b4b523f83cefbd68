//! Criterion benchmarks for the hot paths: Heffter construction, integral
//! homology via Smith normal form, canonical forms, the q=5 assembly, and
//! bistellar reduction of a pipeline sphere.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use trisphere_core::assembly::{assemble_sphere, triangulate_sphere};
use trisphere_core::canonical::{canonical_form, DEFAULT_BUDGET};
use trisphere_core::field::make_field;
use trisphere_core::heffter::{heffter_cellulation, heffter_triangulation, HeffterSpec};
use trisphere_core::homology::homology;
use trisphere_core::verify::bistellar_reduce;

fn spec5() -> HeffterSpec {
    let f = make_field(5, 1, None).unwrap();
    HeffterSpec::new(f.clone(), f.element(&[2])).unwrap()
}

fn spec9() -> HeffterSpec {
    let f = make_field(3, 2, Some(&[2, 1, 1])).unwrap();
    HeffterSpec::new(f.clone(), f.element(&[2, 2])).unwrap()
}

fn bench_heffter(c: &mut Criterion) {
    c.bench_function("heffter_cellulation_q9", |b| {
        let spec = spec9();
        b.iter(|| heffter_cellulation(&spec))
    });
    c.bench_function("heffter_triangulation_q9", |b| {
        let spec = spec9();
        b.iter(|| heffter_triangulation(&spec))
    });
}

fn bench_homology(c: &mut Criterion) {
    c.bench_function("homology_t9", |b| {
        let t = heffter_triangulation(&spec9());
        b.iter(|| homology(&t))
    });
}

fn bench_canonical(c: &mut Criterion) {
    c.bench_function("canonical_form_t9", |b| {
        let t = heffter_triangulation(&spec9());
        b.iter(|| canonical_form(&t, DEFAULT_BUDGET).unwrap())
    });
}

fn bench_assembly(c: &mut Criterion) {
    c.bench_function("assemble_sphere_q5_m2", |b| {
        let spec = spec5();
        b.iter(|| assemble_sphere(&spec, 2).unwrap())
    });
}

fn bench_bistellar(c: &mut Criterion) {
    c.bench_function("bistellar_reduce_q5_m2", |b| {
        let s = assemble_sphere(&spec5(), 2).unwrap();
        let t = triangulate_sphere(&s, &vec![0; s.registry_size()]).unwrap();
        b.iter_batched(
            || t.clone(),
            |t| bistellar_reduce(&t, 1_000_000, 42),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_heffter,
    bench_homology,
    bench_canonical,
    bench_assembly,
    bench_bistellar
);
criterion_main!(benches);
