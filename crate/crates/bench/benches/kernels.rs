use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::hint::black_box;
use survival_core::dynamics::{Decomposition, DirectTransform};
use survival_core::oracle::FiniteLattice;
use survival_core::resonance::find_pole;
use survival_core::{AdatomSpec, BandHalf, Sheet, SubstrateSpec};

fn green(c: &mut Criterion) {
    let square = SubstrateSpec::square(1.0);
    let chain = SubstrateSpec::chain(1.0);
    let z = Complex64::new(1.7, 0.05);
    c.bench_function("square_green_physical", |b| b.iter(|| square.green(black_box(z), Sheet::Physical)));
    c.bench_function("square_green_second", |b| b.iter(|| square.green(black_box(z.conj()), Sheet::Second)));
    c.bench_function("chain_green_physical", |b| b.iter(|| chain.green(black_box(z), Sheet::Physical)));
}

fn pole(c: &mut Criterion) {
    let spec = AdatomSpec::reference();
    c.bench_function("find_pole", |b| b.iter(|| find_pole(black_box(&spec))));
}

fn transforms(c: &mut Criterion) {
    let spec = AdatomSpec::reference();
    c.bench_function("direct_transform_build", |b| b.iter(|| DirectTransform::new(black_box(&spec))));
    let direct = DirectTransform::new(&spec).unwrap();
    c.bench_function("direct_amplitude", |b| b.iter(|| direct.amplitude(black_box(150.0))));

    let res = find_pole(&spec).unwrap();
    let dec = Decomposition::new(&spec, &res).unwrap();
    let mut group = c.benchmark_group("line_integral");
    for t in [1.0, 10.0, 100.0] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| dec.line_integral(0.0, BandHalf::Lower, black_box(t)))
        });
    }
    group.finish();
}

fn chebyshev(c: &mut Criterion) {
    let spec = AdatomSpec::reference();
    let mut group = c.benchmark_group("chebyshev_moments");
    group.sample_size(10);
    for size in [100, 400] {
        let lattice = FiniteLattice::new(size, spec).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(size), &lattice, |b, lat| {
            b.iter(|| lat.chebyshev_moments(black_box(256)))
        });
    }
    group.finish();
}

criterion_group!(benches, green, pole, transforms, chebyshev);
criterion_main!(benches);
