use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dibom::gates::layer_unitary;
use dibom_bench::dibom_network;
use std::hint::black_box;

fn layer_unitaries(c: &mut Criterion) {
    let mut group = c.benchmark_group("layer_unitary");
    for n in [2, 3, 4, 5] {
        let network = dibom_network(n, 2);
        let circuit = &network.segments()[0];
        for layer in &circuit.layers {
            group.bench_with_input(BenchmarkId::new(layer.name(), n), &n, |b, &n| {
                b.iter(|| layer_unitary(black_box(layer), n).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, layer_unitaries);
criterion_main!(benches);
