use dibom::datagen::{
    corrupt, gen_dataset, gen_dataset_with_inputs, split, CorruptionConfig, Dataset, InputKind,
    IntrinsicSpec,
};
use dibom::expressivity::{fbe_upper_bound, Architecture, FbeConfig};
use dibom::gates::{
    apply, gcz_diagonal, layer_unitary, pair_projector_diagonal, qubit_pairs, rotation_unitary,
    GeneralizedCzLayer, Layer, ProductRotationLayer,
};
use dibom::linalg::{
    c, embed, haar_state, haar_unitary, hermitian_exp, hermiticity_defect, kron_all,
    max_abs_diff, partial_trace_op, unitarity_defect, CMat, DensityMatrix,
};
use dibom::network::{build_dibom, build_hardware_efficient, Circuit, Network};
use dibom::training::gradient::layer_gradients;
use dibom::training::kupdate::{k_update, LocalGenerator};
use dibom::training::loss::{global_loss, local_loss};
use dibom::training::{train, LossKind, Method, TrainingConfig};
use dibom::{gates, RngSeed};
use proptest::prelude::*;

fn random_layer(n: usize, kind: u8, seed: u64) -> Layer {
    let circuit = match kind % 3 {
        0 => build_dibom(n, 1, RngSeed(seed)).unwrap(),
        1 => build_dibom(n, 2, RngSeed(seed)).unwrap(),
        _ => build_hardware_efficient(n, 2, gates::Connectivity::default(), RngSeed(seed)).unwrap(),
    };
    circuit.layers.last().unwrap().clone()
}

fn random_density(n: usize, seed: u64) -> DensityMatrix {
    let weights = [0.5, 0.3, 0.2];
    let dim = 1 << n;
    let mut m = CMat::zeros(dim, dim);
    for (i, w) in weights.iter().enumerate() {
        m += haar_state(n, RngSeed(seed).derive(i as u64)).projector().into_matrix() * c(*w, 0.0);
    }
    DensityMatrix::new(m).unwrap()
}

fn product_data(n: usize, count: usize, seed: u64) -> Dataset {
    gen_dataset_with_inputs(IntrinsicSpec::ProductThenGcz, n, count, InputKind::ProductForm, RngSeed(seed))
        .unwrap()
}

fn is_product_unitary(u: &CMat, n: usize) -> bool {
    // a Kronecker product is recovered from its single-qubit reductions up to phase
    let dim = 1 << n;
    let factors: Vec<CMat> = (0..n)
        .map(|q| {
            let reduced = partial_trace_op(u, n, &[q]).unwrap() / c((dim / 2) as f64, 0.0);
            reduced.clone() / c(reduced.determinant().sqrt().norm(), 0.0)
        })
        .collect();
    let rebuilt = kron_all(&factors);
    dibom::linalg::max_abs_diff_up_to_phase(&rebuilt, u) < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn layer_unitaries_are_unitary(n in 1usize..=4, kind in 0u8..3, seed in any::<u64>()) {
        let layer = random_layer(n, kind, seed);
        let u = layer_unitary(&layer, n).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn gcz_phases_multiply_over_pairs(n in 2usize..=4, seed in any::<u64>()) {
        let Layer::GeneralizedCz(g) = random_layer(n, 1, seed) else { unreachable!() };
        let full = gcz_diagonal(n, &g.betas);
        let mut product = vec![c(1.0, 0.0); 1 << n];
        for (p, &beta) in g.betas.iter().enumerate() {
            let mut single = vec![0.0; g.betas.len()];
            single[p] = beta;
            for (acc, f) in product.iter_mut().zip(gcz_diagonal(n, &single)) {
                *acc *= f;
            }
        }
        for (a, b) in full.iter().zip(&product) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn product_layer_is_kronecker_product(n in 1usize..=4, seed in any::<u64>()) {
        let Layer::ProductRotation(p) = random_layer(n, 0, seed) else { unreachable!() };
        let factors: Vec<CMat> = p.alphas.iter().map(rotation_unitary).collect();
        let u = layer_unitary(&Layer::ProductRotation(p.clone()), n).unwrap();
        prop_assert!(max_abs_diff(&u, &kron_all(&factors)) < 1e-12);
    }

    #[test]
    fn apply_preserves_trace_hermiticity_and_spectrum(
        n in 1usize..=4,
        kind in 0u8..3,
        seed in any::<u64>(),
    ) {
        let rho = random_density(n, seed);
        let out = apply(&random_layer(n, kind, seed ^ 0x5a5a), &rho).unwrap();
        prop_assert!((out.trace() - 1.0).norm() < 1e-10);
        prop_assert!(hermiticity_defect(out.matrix()) < 1e-10);
        prop_assert!(out.min_eigenvalue() > -1e-10);
        let before = rho.eigenvalues();
        let after = out.eigenvalues();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn k_updates_are_hermitian_and_stay_in_family(
        n in 2usize..=3,
        depth in 2usize..=4,
        seed in any::<u64>(),
        eps in 0.01f64..1.0,
    ) {
        let data = gen_dataset(IntrinsicSpec::HaarRandom, n, 3, RngSeed(seed)).unwrap();
        let net = Network::Circuit(build_dibom(n, depth, RngSeed(seed ^ 1)).unwrap());
        let gradients = layer_gradients(&net, &data.samples, LossKind::Global).unwrap();
        let Network::Circuit(circuit) = &net else { unreachable!() };
        for (l, layer) in circuit.layers.iter().enumerate() {
            let update = k_update(layer, &gradients[0][l], n, 0.5).unwrap().unwrap();
            prop_assert!(hermiticity_defect(&update.generator) < 1e-10);
            let direct = hermitian_exp(&update.generator, eps).unwrap() * layer.unitary(n).unwrap();
            let moved = update.apply(layer, eps).unwrap();
            let u = moved.unitary(n).unwrap();
            prop_assert!(dibom::linalg::max_abs_diff_up_to_phase(&u, &direct) < 1e-10);
            match (&moved, &update.local) {
                (Layer::ProductRotation(_), LocalGenerator::Product { .. }) => {
                    prop_assert!(is_product_unitary(&direct, n));
                }
                (Layer::GeneralizedCz(g), LocalGenerator::Gcz { .. }) => {
                    let off: f64 = (0..1 << n)
                        .flat_map(|i| (0..1 << n).map(move |j| (i, j)))
                        .filter(|(i, j)| i != j)
                        .map(|(i, j)| direct[(i, j)].norm())
                        .fold(0.0, f64::max);
                    prop_assert!(off < 1e-10);
                    let diag = gcz_diagonal(n, &g.betas);
                    for (d, expected) in diag.iter().enumerate() {
                        prop_assert!((direct[(d, d)] - expected).norm() < 1e-10);
                    }
                }
                _ => prop_assert!(false, "unexpected family"),
            }
        }
    }

    #[test]
    fn gcz_generator_lies_in_pair_span(n in 2usize..=4, seed in any::<u64>()) {
        let dim = 1 << n;
        let data = gen_dataset(IntrinsicSpec::HaarRandom, n, 2, RngSeed(seed)).unwrap();
        let net = Network::Circuit(build_dibom(n, 2, RngSeed(seed ^ 7)).unwrap());
        let gradients = layer_gradients(&net, &data.samples, LossKind::Global).unwrap();
        let Network::Circuit(circuit) = &net else { unreachable!() };
        let update = k_update(&circuit.layers[1], &gradients[0][1], n, 0.5).unwrap().unwrap();
        let LocalGenerator::Gcz { coefficients } = &update.local else { unreachable!() };
        let mut rebuilt = vec![0.0; dim];
        for (&(j, k), kappa) in qubit_pairs(n).iter().zip(coefficients) {
            for (r, m) in rebuilt.iter_mut().zip(pair_projector_diagonal(n, j, k)) {
                *r += kappa * m;
            }
        }
        for d in 0..dim {
            prop_assert!(update.generator[(d, d)].im.abs() < 1e-12);
            prop_assert!((update.generator[(d, d)].re - rebuilt[d]).abs() < 1e-12);
        }
    }

    #[test]
    fn losses_are_bounded(n in 1usize..=4, depth in 1usize..=4, seed in any::<u64>()) {
        let data = product_data(n, 3, seed);
        let net = Network::Circuit(build_dibom(n, depth, RngSeed(seed ^ 3)).unwrap());
        for value in [
            global_loss(&net, &data.samples).unwrap(),
            local_loss(&net, &data.samples).unwrap(),
        ] {
            prop_assert!((-1e-12..=1.0 + 1e-9).contains(&value));
        }
    }

    #[test]
    fn zero_local_loss_implies_zero_global_loss(n in 1usize..=4, seed in any::<u64>()) {
        let data = product_data(n, 4, seed);
        let v = data.provenance.intrinsic.clone().unwrap();
        let coefficients = gates::pauli_coefficients(n, &dibom::linalg::unitary_log(&v).unwrap());
        let net = Network::Circuit(
            Circuit::new(n, vec![Layer::GeneralUnitary(gates::GeneralUnitaryLayer { coefficients })])
                .unwrap(),
        );
        let local = local_loss(&net, &data.samples).unwrap();
        prop_assert!(local.abs() < 1e-10);
        prop_assert!(global_loss(&net, &data.samples).unwrap() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn training_losses_never_increase(
        n in 1usize..=3,
        depth in 1usize..=4,
        seed in any::<u64>(),
        method in 0u8..3,
        local in any::<bool>(),
    ) {
        let data = product_data(n, 4, seed);
        let mut net = Network::Circuit(build_dibom(n, depth, RngSeed(seed ^ 9)).unwrap());
        let method = [Method::Simultaneous, Method::LayerByLayer, Method::Nesterov][method as usize];
        let config = TrainingConfig {
            max_iters: 4,
            method,
            loss: if local { LossKind::Local } else { LossKind::Global },
            ..TrainingConfig::default()
        };
        let trace = train(&mut net, &data, None, &config).unwrap();
        let losses = trace.train_losses();
        prop_assert!(losses.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(losses.iter().all(|l| (-1e-12..=1.0 + 1e-9).contains(l)));
    }

    #[test]
    fn training_is_deterministic(n in 1usize..=3, seed in any::<u64>(), method in 0u8..3) {
        let data = gen_dataset(IntrinsicSpec::HaarRandom, n, 4, RngSeed(seed)).unwrap();
        let (train_set, test_set) = split(&data, 0.5, RngSeed(seed ^ 1)).unwrap();
        let method = [Method::Simultaneous, Method::LayerByLayer, Method::Nesterov][method as usize];
        let config = TrainingConfig { max_iters: 3, method, ..TrainingConfig::default() };
        let run = || {
            let mut net = Network::Circuit(build_dibom(n, 3, RngSeed(seed ^ 2)).unwrap());
            train(&mut net, &train_set, Some(&test_set), &config).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.to_csv(), b.to_csv());
        for (x, y) in a.records.iter().zip(&b.records) {
            prop_assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
        }
    }

    #[test]
    fn fbe_bound_tightens_with_more_targets_and_restarts(n in 1usize..=2, seed in any::<u64>()) {
        let base = FbeConfig { k: 2, m: 2, restarts: 1, inner_iters: 2, seed: RngSeed(seed), ..FbeConfig::default() };
        let a = fbe_upper_bound(Architecture::Dibom, n, 2, &base).unwrap();
        let more_k = fbe_upper_bound(Architecture::Dibom, n, 2, &FbeConfig { k: 3, ..base.clone() }).unwrap();
        let more_r = fbe_upper_bound(Architecture::Dibom, n, 2, &FbeConfig { restarts: 2, ..base.clone() }).unwrap();
        prop_assert!(more_k.estimate <= a.estimate);
        prop_assert_eq!(&more_k.scores[..2], &a.scores[..]);
        for (r, s) in more_r.scores.iter().zip(&a.scores) {
            prop_assert!(r >= s);
        }
        prop_assert!(a.scores.iter().all(|s| (0.0..=1.0 + 1e-9).contains(s)));
        prop_assert_eq!(a.estimate, a.scores[a.argmin]);
    }

    #[test]
    fn datasets_round_trip_and_corrupt_exactly(
        n in 1usize..=3,
        count in 1usize..=12,
        ratio in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let data = gen_dataset(IntrinsicSpec::HaarRandom, n, count, RngSeed(seed)).unwrap();
        for s in &data.samples {
            prop_assert!((s.input.amplitudes().norm() - 1.0).abs() < 1e-12);
            prop_assert!((s.label.amplitudes().norm() - 1.0).abs() < 1e-12);
        }
        let back = Dataset::from_json(&data.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &data);
        let corrupted = corrupt(&data, &CorruptionConfig { ratio, seed: RngSeed(seed ^ 4) }).unwrap();
        prop_assert_eq!(corrupted.len(), count);
        let changed = data.samples.iter().zip(&corrupted.samples).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, (ratio * count as f64).floor() as usize);
    }

    #[test]
    fn embedding_matches_kronecker_layout(n in 1usize..=4, target in 0usize..4, seed in any::<u64>()) {
        let target = target % n;
        let u = haar_unitary(2, RngSeed(seed));
        let mut factors = vec![CMat::identity(2, 2); n];
        factors[target] = u.clone();
        prop_assert!(max_abs_diff(&embed(&u, &[target], n).unwrap(), &kron_all(&factors)) < 1e-14);
        let layer = Layer::ProductRotation(ProductRotationLayer::identity(n));
        prop_assert!(max_abs_diff(&layer_unitary(&layer, n).unwrap(), &CMat::identity(1 << n, 1 << n)) < 1e-15);
        let gcz = Layer::GeneralizedCz(GeneralizedCzLayer::identity(n));
        prop_assert!(max_abs_diff(&layer_unitary(&gcz, n).unwrap(), &CMat::identity(1 << n, 1 << n)) < 1e-15);
    }
}
