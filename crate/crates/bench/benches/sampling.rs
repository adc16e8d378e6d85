use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mscr_bench::rings;
use mscr_core::{augment, AugmentationConfig, NormMetric};

fn bench_sampling(c: &mut Criterion) {
    let data = rings(1000);
    let mut group = c.benchmark_group("augment");
    for norm in [NormMetric::Linf, NormMetric::L2] {
        let config = AugmentationConfig {
            epsilon: 0.01,
            k: 10,
            norm,
            clip_to_unit: false,
            seed: 5,
        };
        group.bench_with_input(
            BenchmarkId::new("k10_n1000_2d", norm.to_string()),
            &config,
            |b, config| b.iter(|| black_box(augment(&data, config).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_sampling);
criterion_main!(benches);
