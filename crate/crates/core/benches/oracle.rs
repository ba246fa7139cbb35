use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fip_core::gen::{self, marker_family};
use fip_core::harness::{golden_scenarios, run_batch};
use fip_core::oracle::brute_force_maximal_with;
use fip_core::par::Exec;
use fip_core::IntersectionProperty;

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn brute_force(c: &mut Criterion) {
    let mut rng = gen::rng(7);
    let family = marker_family(&mut rng, 12, 40, 0.3).expect("generator output is valid");
    let mut group = c.benchmark_group("brute_force_maximal");
    for (name, exec) in EXECS {
        group.bench_with_input(BenchmarkId::new(name, "I=12"), &exec, |b, &exec| {
            b.iter(|| brute_force_maximal_with(black_box(&family), IntersectionProperty::F, exec).unwrap())
        });
    }
    group.finish();
}

fn golden_batch(c: &mut Criterion) {
    let scenarios = golden_scenarios();
    let mut group = c.benchmark_group("golden_batch");
    group.sample_size(10);
    for (name, exec) in EXECS {
        group.bench_function(name, |b| b.iter(|| run_batch(black_box(scenarios.clone()), exec)));
    }
    group.finish();
}

criterion_group!(benches, brute_force, golden_batch);
criterion_main!(benches);
