use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use viana_core::ensemble::member_rng;
use viana_core::maps::{make_f1, make_f2_default, DEFAULT_MISIUREWICZ_A};
use viana_core::orbit::{Orbit, TimeParams};
use viana_core::stats::tail_curves;
use viana_core::ulam::{build_ulam_2d, build_ulam_base, stationary_density, BaseSelector};

const A: f64 = DEFAULT_MISIUREWICZ_A;

fn orbit_steps(c: &mut Criterion) {
    let f1 = make_f1(A, 0.01, 2.0).unwrap();
    let f2 = make_f2_default(A, 2, A, 0.005).unwrap();
    let mut g = c.benchmark_group("orbit_1000_steps");
    for (name, spec) in [("f1", &f1), ("f2", &f2)] {
        g.bench_function(name, |b| {
            b.iter_batched(
                || Orbit::lebesgue(spec, member_rng(1, 0)),
                |mut o| black_box(o.advance(1000)),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();

    let params = TimeParams {
        c: 0.2223,
        epsilon: 0.11115,
        delta: 0.00628,
    };
    c.bench_function("time_profile_f1_400", |b| {
        b.iter_batched(
            || Orbit::lebesgue(&f1, member_rng(2, 0)),
            |mut o| black_box(o.time_profile(&params, 400)),
            BatchSize::SmallInput,
        )
    });
}

fn tails(c: &mut Criterion) {
    let f1 = make_f1(A, 0.01, 2.0).unwrap();
    let ns: Vec<u64> = (0..=400).step_by(5).collect();
    let mut g = c.benchmark_group("tails");
    g.sample_size(10);
    g.bench_function("f1_1000_members", |b| {
        b.iter(|| black_box(tail_curves(&f1, 0.2223, 0.11115, 0.00628, &ns, 1000, 3)))
    });
    g.finish();
}

fn ulam(c: &mut Criterion) {
    let f1 = make_f1(A, 0.01, 2.0).unwrap();
    let mut g = c.benchmark_group("ulam");
    g.sample_size(10);
    g.bench_function("golden_4096_stationary", |b| {
        let beta = (1.0 + 5f64.sqrt()) / 2.0;
        b.iter(|| {
            let op = build_ulam_base(BaseSelector::Beta { beta }, 4096).unwrap();
            black_box(stationary_density(&op))
        })
    });
    g.bench_function("f1_product_32x32", |b| {
        b.iter(|| black_box(build_ulam_2d(&f1, 32, 32, 8, 4)))
    });
    g.finish();
}

criterion_group!(benches, orbit_steps, tails, ulam);
criterion_main!(benches);
