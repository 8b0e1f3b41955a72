use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use intervaldyn::hofbauer::build_tower;
use intervaldyn::induced::build_induced;
use intervaldyn::lyapunov::profile;
use intervaldyn::symbolic::kneading;
use intervaldyn::{make_family, FamilyId};

fn orbits(c: &mut Criterion) {
    let f = make_family(FamilyId::Logistic, Some(4.0)).unwrap();
    c.bench_function("logistic4 profile 1e5", |b| {
        b.iter(|| profile(&f, black_box(0.3), 100_000, &[100_000]).unwrap())
    });
}

fn towers(c: &mut Criterion) {
    let t = make_family(FamilyId::Tent, Some(1.8)).unwrap();
    c.bench_function("tent1.8 tower depth 30", |b| b.iter(|| build_tower(&t, black_box(30))));
}

fn symbolic(c: &mut Criterion) {
    let f = make_family(FamilyId::Logistic, Some(3.9)).unwrap();
    c.bench_function("logistic3.9 kneading 20", |b| {
        b.iter(|| kneading(&f, black_box(20)).unwrap())
    });
    c.bench_function("logistic3.9 induced 12", |b| {
        b.iter(|| build_induced(&f, black_box(12)).unwrap())
    });
}

criterion_group!(benches, orbits, towers, symbolic);
criterion_main!(benches);
