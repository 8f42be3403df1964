use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dibom::expressivity::{fbe_upper_bound, Architecture, FbeConfig};

fn fbe(c: &mut Criterion) {
    let mut group = c.benchmark_group("fbe");
    group.sample_size(10);
    let config = FbeConfig {
        k: 4,
        m: 2,
        restarts: 1,
        inner_iters: 20,
        ..FbeConfig::default()
    };
    for depth in [1, 3, 5] {
        group.bench_with_input(BenchmarkId::new("dibom", depth), &depth, |b, &depth| {
            b.iter(|| fbe_upper_bound(Architecture::Dibom, 3, depth, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fbe);
criterion_main!(benches);
