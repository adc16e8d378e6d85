use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mscr_bench::{random_dataset, rings};
use mscr_core::{min_class_separation, min_class_separation_oracle, NormMetric};

fn bench_separation(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_class_separation");
    for &n in &[500usize, 2000] {
        let data = rings(n);
        group.bench_with_input(BenchmarkId::new("pruned_linf_2d", n), &data, |b, data| {
            b.iter(|| black_box(min_class_separation(data, NormMetric::Linf, 0).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("oracle_linf_2d", n), &data, |b, data| {
            b.iter(|| black_box(min_class_separation_oracle(data, NormMetric::Linf).unwrap()))
        });
    }
    let wide = random_dataset(400, 256, 3, 7);
    for norm in [NormMetric::Linf, NormMetric::L2] {
        group.bench_with_input(
            BenchmarkId::new("pruned_256d", norm.to_string()),
            &wide,
            |b, data| b.iter(|| black_box(min_class_separation(data, norm, 0).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_separation);
criterion_main!(benches);
