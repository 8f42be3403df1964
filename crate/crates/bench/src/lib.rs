//! Shared fixtures for the benchmarks.

use dibom::datagen::{gen_dataset, split, Dataset, IntrinsicSpec};
use dibom::network::{build_dibom, Network};
use dibom::RngSeed;

/// DIBoM network on `n` qubits with `depth` layers.
pub fn dibom_network(n: usize, depth: usize) -> Network {
    Network::Circuit(build_dibom(n, depth, RngSeed(7)).expect("valid shape"))
}

/// Training half of a 20-sample structured dataset on `n` qubits.
pub fn structured_data(n: usize) -> Dataset {
    let full = gen_dataset(IntrinsicSpec::ProductThenGcz, n, 20, RngSeed(3)).expect("dataset");
    split(&full, 0.5, RngSeed(4)).expect("split").0
}
