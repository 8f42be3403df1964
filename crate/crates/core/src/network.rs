//! Model assembly and forward passes.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{
    pair_count, pair_index, su2_params, Connectivity, FixedCzLayer, GeneralUnitaryLayer,
    GeneralizedCzLayer, Layer, ProductRotationLayer, SingleQubitRotation,
};
use crate::linalg::{
    embed, identity, outcome_block, partial_trace, CMat, DensityMatrix, PureState, RngSeed,
};

/// An ordered stack of layers on `n` qubits; `layers[0]` acts first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub layers: Vec<Layer>,
    /// Indices of layers excluded from training.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub frozen: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self> {
        let circuit = Circuit {
            n,
            layers,
            frozen: BTreeSet::new(),
        };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn empty(n: usize) -> Self {
        Circuit {
            n,
            layers: Vec::new(),
            frozen: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        self.layers.iter().try_for_each(|l| l.check_shape(self.n))
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn freeze(&mut self, layer: usize) {
        self.frozen.insert(layer);
    }

    pub fn is_trainable(&self, layer: usize) -> bool {
        !self.frozen.contains(&layer) && self.layers[layer].is_parametrized()
    }

    pub fn layer_unitaries(&self) -> Result<Vec<CMat>> {
        self.layers.iter().map(|l| l.unitary(self.n)).collect()
    }

    /// `U_L ⋯ U_1`.
    pub fn unitary(&self) -> Result<CMat> {
        let mut u = identity(1 << self.n);
        for layer in &self.layers {
            u = layer.unitary(self.n)? * u;
        }
        Ok(u)
    }

    pub fn forward(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_qubits(self.n, rho.n_qubits())?;
        self.layers
            .iter()
            .try_fold(rho.clone(), |acc, layer| acc.conjugate(&layer.unitary(self.n)?))
    }

    pub fn forward_state(&self, psi: &PureState) -> Result<PureState> {
        check_qubits(self.n, psi.n_qubits())?;
        psi.evolve(&self.unitary()?)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let k = layer.num_params();
            layer.set_params(&values[offset..offset + k])?;
            offset += k;
        }
        Ok(())
    }
}

fn check_qubits(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            expected: 1 << expected,
            actual: 1 << actual,
        });
    }
    Ok(())
}

pub fn forward(circuit: &Circuit, rho: &DensityMatrix) -> Result<DensityMatrix> {
    circuit.forward(rho)
}

/// Measure-and-correct block: ancillas in `|0⟩`, a pre-measurement circuit,
/// a computational-basis measurement of `measured`, and one branch circuit per
/// outcome acting on the surviving qubits.
///
/// Outcome index `i` reads `measured[0]` as its most significant bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    pub n_input: usize,
    pub n_ancilla: usize,
    pub pre: Circuit,
    pub measured: Vec<usize>,
    pub branches: Vec<Circuit>,
}

impl ConditionalModel {
    pub fn new(
        n_input: usize,
        n_ancilla: usize,
        pre: Circuit,
        measured: Vec<usize>,
        branches: Vec<Circuit>,
    ) -> Result<Self> {
        let model = ConditionalModel {
            n_input,
            n_ancilla,
            pre,
            measured,
            branches,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn n_total(&self) -> usize {
        self.n_input + self.n_ancilla
    }

    pub fn n_output(&self) -> usize {
        self.n_total() - self.measured.len()
    }

    pub fn n_outcomes(&self) -> usize {
        1 << self.measured.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n_total(), self.pre.n)?;
        self.pre.validate()?;
        for (k, &q) in self.measured.iter().enumerate() {
            if q >= self.n_total() {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n: self.n_total(),
                });
            }
            if self.measured[..k].contains(&q) {
                return Err(Error::InvalidArgument(format!("qubit {q} measured twice")));
            }
        }
        if self.n_output() == 0 {
            return Err(Error::InvalidArgument("no qubit survives the measurement".into()));
        }
        if self.branches.len() < self.n_outcomes() {
            return Err(Error::MissingBranch(self.branches.len()));
        }
        if self.branches.len() > self.n_outcomes() {
            return Err(Error::InvalidArgument(format!(
                "{} branches for {} outcomes",
                self.branches.len(),
                self.n_outcomes()
            )));
        }
        for branch in &self.branches {
            check_qubits(self.n_output(), branch.n)?;
            branch.validate()?;
        }
        Ok(())
    }

    /// Input state padded with `|0⟩` ancillas.
    pub fn padded_input(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_qubits(self.n_input, rho.n_qubits())?;
        Ok(rho.kron(&DensityMatrix::basis(self.n_ancilla, 0)))
    }

    /// Unnormalized post-measurement blocks `ρ²_i` on the surviving qubits.
    pub fn outcome_blocks(&self, rho: &DensityMatrix) -> Result<Vec<CMat>> {
        let after = self.pre.forward(&self.padded_input(rho)?)?;
        (0..self.n_outcomes())
            .map(|i| outcome_block(after.matrix(), &self.measured, i, self.n_total()))
            .collect()
    }

    pub fn forward(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        let blocks = self.outcome_blocks(rho)?;
        let dim = 1 << self.n_output();
        let mut out = CMat::zeros(dim, dim);
        for (block, branch) in blocks.iter().zip(&self.branches) {
            let v = branch.unitary()?;
            out += &v * block * v.adjoint();
        }
        Ok(DensityMatrix::from_raw(self.n_output(), out))
    }

    pub fn num_params(&self) -> usize {
        self.pre.num_params() + self.branch_params()
    }

    pub fn branch_params(&self) -> usize {
        self.branches.iter().map(Circuit::num_params).sum()
    }
}

pub fn conditional_forward(model: &ConditionalModel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    model.forward(rho)
}

/// General unitary on input, hidden and output registers, keeping the output.
///
/// Register layout: input qubits first, then hidden, then output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativeModel {
    pub n_input: usize,
    pub n_hidden: usize,
    pub n_output: usize,
    pub circuit: Circuit,
}

impl DissipativeModel {
    pub fn n_total(&self) -> usize {
        self.n_input + self.n_hidden + self.n_output
    }

    pub fn output_qubits(&self) -> Vec<usize> {
        (self.n_total() - self.n_output..self.n_total()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_input == 0 || self.n_output == 0 {
            return Err(Error::InvalidArgument(
                "dissipative model needs input and output qubits".into(),
            ));
        }
        check_qubits(self.n_total(), self.circuit.n)?;
        self.circuit.validate()
    }

    pub fn padded_input(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_qubits(self.n_input, rho.n_qubits())?;
        Ok(rho.kron(&DensityMatrix::basis(self.n_hidden + self.n_output, 0)))
    }

    pub fn forward(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        let full = self.circuit.forward(&self.padded_input(rho)?)?;
        partial_trace(&full, &self.output_qubits())
    }
}

pub fn dissipative_forward(model: &DissipativeModel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    model.forward(rho)
}

/// Any trainable network: a plain circuit, a conditional block, or a
/// dissipative baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum Network {
    Circuit(Circuit),
    Conditional(ConditionalModel),
    Dissipative(DissipativeModel),
}

/// Position of a layer: `segment` 0 is the main (or pre-measurement)
/// circuit, segment `1 + i` is branch `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerId {
    pub segment: usize,
    pub layer: usize,
}

impl Network {
    pub fn n_input(&self) -> usize {
        match self {
            Network::Circuit(c) => c.n,
            Network::Conditional(m) => m.n_input,
            Network::Dissipative(d) => d.n_input,
        }
    }

    pub fn n_output(&self) -> usize {
        match self {
            Network::Circuit(c) => c.n,
            Network::Conditional(m) => m.n_output(),
            Network::Dissipative(d) => d.n_output,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Network::Circuit(c) => c.validate(),
            Network::Conditional(m) => m.validate(),
            Network::Dissipative(d) => d.validate(),
        }
    }

    pub fn forward(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            Network::Circuit(c) => c.forward(rho),
            Network::Conditional(m) => m.forward(rho),
            Network::Dissipative(d) => d.forward(rho),
        }
    }

    pub fn segments(&self) -> Vec<&Circuit> {
        match self {
            Network::Circuit(c) => vec![c],
            Network::Conditional(m) => std::iter::once(&m.pre).chain(&m.branches).collect(),
            Network::Dissipative(d) => vec![&d.circuit],
        }
    }

    pub fn segments_mut(&mut self) -> Vec<&mut Circuit> {
        match self {
            Network::Circuit(c) => vec![c],
            Network::Conditional(m) => std::iter::once(&mut m.pre)
                .chain(m.branches.iter_mut())
                .collect(),
            Network::Dissipative(d) => vec![&mut d.circuit],
        }
    }

    pub fn layer(&self, id: LayerId) -> &Layer {
        &self.segments()[id.segment].layers[id.layer]
    }

    pub fn layer_mut(&mut self, id: LayerId) -> &mut Layer {
        &mut self.segments_mut().swap_remove(id.segment).layers[id.layer]
    }

    /// Layers that receive updates, in segment then layer order.
    pub fn trainable_layers(&self) -> Vec<LayerId> {
        self.segments()
            .iter()
            .enumerate()
            .flat_map(|(segment, c)| {
                (0..c.layers.len())
                    .filter(|&layer| c.is_trainable(layer))
                    .map(move |layer| LayerId { segment, layer })
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.segments().iter().map(|c| c.num_params()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.segments().iter().flat_map(|c| c.params()).collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut offset = 0;
        for c in self.segments_mut() {
            let k = c.num_params();
            c.set_params(&values[offset..offset + k])?;
            offset += k;
        }
        Ok(())
    }

    /// Flat indices of parameters in trainable (non-frozen) layers.
    pub fn trainable_param_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut offset = 0;
        for c in self.segments() {
            for (idx, layer) in c.layers.iter().enumerate() {
                let k = layer.num_params();
                if c.is_trainable(idx) {
                    out.extend(offset..offset + k);
                }
                offset += k;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    Dibom,
    HardwareEfficient,
    IsingBornMachine,
    Dissipative {
        input: usize,
        hidden: usize,
        output: usize,
    },
    Conditional,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Dibom => "dibom",
            ModelKind::HardwareEfficient => "hardware_efficient",
            ModelKind::IsingBornMachine => "ising_born_machine",
            ModelKind::Dissipative { .. } => "dissipative",
            ModelKind::Conditional => "conditional",
        }
    }
}

/// Parameter count of a model family at `n` qubits and depth `depth`.
pub fn count_parameters(kind: ModelKind, n: usize, depth: usize) -> u64 {
    let (n, depth) = (n as u64, depth as u64);
    let products = depth.div_ceil(2);
    let entanglers = depth / 2;
    match kind {
        ModelKind::Dibom | ModelKind::Conditional => {
            3 * n * products + n * n.saturating_sub(1) / 2 * entanglers
        }
        ModelKind::HardwareEfficient => 3 * n * products,
        ModelKind::IsingBornMachine => n * n.saturating_sub(1) / 2 + 3 * n,
        ModelKind::Dissipative {
            input,
            hidden,
            output,
        } => 4u64.pow((input + hidden + output) as u32) - 1,
    }
}

/// A network tagged with the family and depth it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub n: usize,
    pub depth: usize,
    pub network: Network,
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text)?;
        model.network.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn random_product(n: usize, rng: &mut impl Rng) -> Layer {
    let pi = std::f64::consts::PI;
    Layer::ProductRotation(ProductRotationLayer {
        alphas: (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-pi..=pi)))
            .collect(),
    })
}

fn random_gcz(n: usize, rng: &mut impl Rng) -> Layer {
    Layer::GeneralizedCz(GeneralizedCzLayer {
        betas: (0..pair_count(n)).map(|_| rng.random_range(0.0..=1.0)).collect(),
    })
}

/// Alternating product-rotation / entangler stack with a product layer first;
/// odd depths end with a product layer.
fn alternating(
    n: usize,
    depth: usize,
    rng: &mut impl Rng,
    mut entangler: impl FnMut(&mut dyn FnMut() -> f64) -> Layer,
) -> Result<Circuit> {
    if depth == 0 {
        return Err(Error::InvalidArgument("layer count must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("qubit count must be at least 1".into()));
    }
    let layers = (0..depth)
        .map(|l| {
            if l % 2 == 0 {
                random_product(n, rng)
            } else {
                entangler(&mut || rng.random_range(0.0..=1.0))
            }
        })
        .collect();
    Circuit::new(n, layers)
}

/// DIBoM of `depth` layers with seeded initial parameters.
pub fn build_dibom(n: usize, depth: usize, seed: RngSeed) -> Result<Circuit> {
    let mut rng = seed.rng();
    alternating(n, depth, &mut rng, |draw| {
        Layer::GeneralizedCz(GeneralizedCzLayer {
            betas: (0..pair_count(n)).map(|_| draw()).collect(),
        })
    })
}

pub fn build_hardware_efficient(
    n: usize,
    depth: usize,
    connectivity: Connectivity,
    seed: RngSeed,
) -> Result<Circuit> {
    let mut rng = seed.rng();
    alternating(n, depth, &mut rng, |_| {
        Layer::FixedCz(FixedCzLayer::new(n, connectivity))
    })
}

/// Hadamards, a generalized-CZ layer, then a product rotation layer.
pub fn build_ising_born(n: usize, seed: RngSeed) -> Result<Circuit> {
    let mut rng = seed.rng();
    let gcz = random_gcz(n, &mut rng);
    let product = random_product(n, &mut rng);
    Circuit::new(n, vec![Layer::Hadamard, gcz, product])
}

/// Dissipative baseline with generator coefficients uniform in
/// `[-π, π] / 2^(total qubits)`.
pub fn build_dissipative(
    n_input: usize,
    n_hidden: usize,
    n_output: usize,
    seed: RngSeed,
) -> Result<DissipativeModel> {
    let total = n_input + n_hidden + n_output;
    let mut rng = seed.rng();
    let scale = std::f64::consts::PI / (1u64 << total) as f64;
    let coefficients = (0..(1usize << (2 * total)) - 1)
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    let circuit = Circuit::new(
        total,
        vec![Layer::GeneralUnitary(GeneralUnitaryLayer { coefficients })],
    )?;
    let model = DissipativeModel {
        n_input,
        n_hidden,
        n_output,
        circuit,
    };
    model.validate()?;
    Ok(model)
}

/// Conditional model with DIBoM-shaped pre-measurement and branch circuits.
///
/// The lowest-index `n_measured` qubits are measured. A branch depth of 0
/// gives parameter-free (identity) branches.
pub fn build_conditional_dibom(
    n_input: usize,
    n_ancilla: usize,
    n_measured: usize,
    pre_depth: usize,
    branch_depth: usize,
    seed: RngSeed,
) -> Result<ConditionalModel> {
    let total = n_input + n_ancilla;
    let pre = build_dibom(total, pre_depth, seed.derive(0))?;
    let survivors = total.checked_sub(n_measured).unwrap_or(0);
    let branches = (0..1usize << n_measured)
        .map(|i| {
            if branch_depth == 0 {
                Ok(Circuit::empty(survivors.max(1)))
            } else {
                build_dibom(survivors, branch_depth, seed.derive(1 + i as u64))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ConditionalModel::new(n_input, n_ancilla, pre, (0..n_measured).collect(), branches)
}

/// Builds a tagged model of the given family. `depth` is ignored for the
/// Ising Born machine and the dissipative baseline.
pub fn build_model(kind: ModelKind, n: usize, depth: usize, seed: RngSeed) -> Result<Model> {
    let network = match kind {
        ModelKind::Dibom => Network::Circuit(build_dibom(n, depth, seed)?),
        ModelKind::HardwareEfficient => Network::Circuit(build_hardware_efficient(
            n,
            depth,
            Connectivity::default(),
            seed,
        )?),
        ModelKind::IsingBornMachine => Network::Circuit(build_ising_born(n, seed)?),
        ModelKind::Dissipative {
            input,
            hidden,
            output,
        } => Network::Dissipative(build_dissipative(input, hidden, output, seed)?),
        ModelKind::Conditional => {
            return Err(Error::InvalidArgument(
                "conditional models are built with build_conditional_dibom".into(),
            ))
        }
    };
    Ok(Model {
        kind,
        n,
        depth,
        network,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// Arbitrary 2×2 unitary on one qubit.
    Single { target: usize, matrix: CMat },
    Cz(usize, usize),
    Other {
        name: String,
        qubits: Vec<usize>,
        matrix: CMat,
    },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Single { target, .. } => vec![*target],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::Other { qubits, .. } => qubits.clone(),
        }
    }

    fn unitary(&self, n: usize) -> Result<CMat> {
        match self {
            Gate::Single { target, matrix } => embed(matrix, &[*target], n),
            Gate::Cz(a, b) => embed(&crate::gates::cz_matrix(), &[*a, *b], n),
            Gate::Other { qubits, matrix, .. } => embed(matrix, qubits, n),
        }
    }
}

/// A gate-level circuit: a list of moments, each a set of gates on
/// disjoint qubits, applied in order.
#[derive(Clone, Debug, PartialEq)]
pub struct GateCircuit {
    pub n: usize,
    pub moments: Vec<Vec<Gate>>,
}

impl GateCircuit {
    pub fn unitary(&self) -> Result<CMat> {
        let mut u = identity(1 << self.n);
        for moment in &self.moments {
            for gate in moment {
                u = gate.unitary(self.n)? * u;
            }
        }
        Ok(u)
    }
}

/// Rewrites a circuit of single-qubit and CZ gates as a DIBoM: each moment
/// becomes an identity-filled product layer followed by a generalized-CZ
/// layer with `β = 1` on its CZ pairs. Equality holds up to a global phase,
/// exactly when every single-qubit gate has unit determinant.
pub fn circuit_to_dibom(circuit: &GateCircuit) -> Result<Circuit> {
    let n = circuit.n;
    let mut layers = Vec::with_capacity(2 * circuit.moments.len());
    for moment in &circuit.moments {
        let mut used = BTreeSet::new();
        let mut product = ProductRotationLayer::identity(n);
        let mut gcz = GeneralizedCzLayer::identity(n);
        for gate in moment {
            for q in gate.qubits() {
                if q >= n {
                    return Err(Error::QubitOutOfRange { index: q, n });
                }
                if !used.insert(q) {
                    return Err(Error::InvalidArgument(format!(
                        "qubit {q} used twice in one moment"
                    )));
                }
            }
            match gate {
                Gate::Single { target, matrix } => {
                    if matrix.shape() != (2, 2) {
                        return Err(Error::DimensionMismatch {
                            expected: 2,
                            actual: matrix.nrows(),
                        });
                    }
                    product.alphas[*target] = su2_params(matrix);
                }
                Gate::Cz(a, b) => gcz.betas[pair_index(n, *a, *b)] = 1.0,
                Gate::Other { name, .. } => return Err(Error::UnsupportedGate(name.clone())),
            }
        }
        layers.push(Layer::ProductRotation(product));
        layers.push(Layer::GeneralizedCz(gcz));
    }
    Circuit::new(n, layers)
}

/// Fixed teleportation instance on inputs `|ψ⟩ ⊗ |00⟩`: qubits 0 and 1 are
/// measured and qubit 2 receives the corrected state.
pub fn teleport_model() -> ConditionalModel {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
    // exp(i π/2 (X + Z)/√2) = i H
    let hadamard = |q: usize| {
        Layer::SingleQubit(SingleQubitRotation {
            target: q,
            alpha: [FRAC_PI_2 * FRAC_1_SQRT_2, 0.0, FRAC_PI_2 * FRAC_1_SQRT_2],
        })
    };
    let cz = |pairs: Vec<(usize, usize)>| Layer::FixedCz(FixedCzLayer::on_pairs(pairs));
    let pre = Circuit::new(
        3,
        vec![
            hadamard(1),
            // CNOT(1 → 2)
            hadamard(2),
            cz(vec![(1, 2)]),
            hadamard(2),
            // CNOT(0 → 1)
            hadamard(1),
            cz(vec![(0, 1)]),
            hadamard(1),
            hadamard(0),
        ],
    )
    .expect("teleportation circuit is well-formed");
    let correction = |alpha: [f64; 3]| {
        Circuit::new(
            1,
            vec![Layer::SingleQubit(SingleQubitRotation { target: 0, alpha })],
        )
        .expect("single-qubit correction is well-formed")
    };
    // outcome 2·m0 + m1: X^{m1} then Z^{m0}; exp(iπ/2 σ) = iσ
    let branches = vec![
        correction([0.0; 3]),
        correction([FRAC_PI_2, 0.0, 0.0]),
        correction([0.0, 0.0, FRAC_PI_2]),
        correction([0.0, FRAC_PI_2, 0.0]),
    ];
    ConditionalModel::new(3, 0, pre, vec![0, 1], branches)
        .expect("teleportation model is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::rotation_unitary;
    use crate::linalg::{
        c, fidelity, haar_state, haar_unitary, kron, max_abs_diff, max_abs_diff_up_to_phase,
        unitarity_defect, ONE, ZERO,
    };

    fn random_density(n: usize, seed: u64) -> DensityMatrix {
        let a = haar_state(n, RngSeed(seed)).projector().into_matrix();
        let b = haar_state(n, RngSeed(seed + 1000)).projector().into_matrix();
        DensityMatrix::new(a * c(0.6, 0.0) + b * c(0.4, 0.0)).unwrap()
    }

    #[test]
    fn build_dibom_shapes() {
        let one = build_dibom(2, 1, RngSeed(0)).unwrap();
        assert_eq!(one.layers.len(), 1);
        assert!(matches!(one.layers[0], Layer::ProductRotation(_)));

        let three = build_dibom(3, 3, RngSeed(0)).unwrap();
        let names: Vec<_> = three.layers.iter().map(Layer::name).collect();
        assert_eq!(names, ["product_rotation", "generalized_cz", "product_rotation"]);

        let four = build_dibom(2, 4, RngSeed(0)).unwrap();
        assert!(matches!(four.layers[3], Layer::GeneralizedCz(_)));
        assert!(build_dibom(2, 0, RngSeed(0)).is_err());
    }

    #[test]
    fn build_dibom_initial_ranges() {
        let circuit = build_dibom(4, 6, RngSeed(9)).unwrap();
        for layer in &circuit.layers {
            match layer {
                Layer::ProductRotation(p) => {
                    assert!(p.alphas.iter().flatten().all(|a| a.abs() <= std::f64::consts::PI))
                }
                Layer::GeneralizedCz(g) => assert!(g.betas.iter().all(|b| (0.0..=1.0).contains(b))),
                _ => unreachable!(),
            }
        }
        assert_eq!(circuit, build_dibom(4, 6, RngSeed(9)).unwrap());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(count_parameters(ModelKind::Dibom, 3, 2241), 13449);
        assert_eq!(count_parameters(ModelKind::Dibom, 2, 2), 7);
        let dissipative = ModelKind::Dissipative {
            input: 1,
            hidden: 0,
            output: 1,
        };
        assert_eq!(count_parameters(dissipative, 0, 0), 15);
        assert_eq!(count_parameters(ModelKind::IsingBornMachine, 3, 3), 12);
        assert_eq!(count_parameters(ModelKind::HardwareEfficient, 2, 5), 18);
        for (n, depth) in [(2, 5), (3, 4), (4, 7)] {
            let built = build_dibom(n, depth, RngSeed(1)).unwrap();
            assert_eq!(
                built.num_params() as u64,
                count_parameters(ModelKind::Dibom, n, depth)
            );
        }
        let d = build_dissipative(1, 1, 1, RngSeed(0)).unwrap();
        assert_eq!(d.circuit.num_params(), 63);
    }

    #[test]
    fn dibom_to_dissipative_ratio_shrinks() {
        let ratios: Vec<f64> = (2..=6)
            .map(|n| {
                let dib = count_parameters(ModelKind::Dibom, n, 5) as f64;
                let dis = count_parameters(
                    ModelKind::Dissipative {
                        input: n,
                        hidden: 0,
                        output: n,
                    },
                    n,
                    5,
                ) as f64;
                dib / dis
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn forward_cases() {
        let rho = random_density(2, 3);
        let empty = Circuit::empty(2);
        assert_eq!(empty.forward(&rho).unwrap(), rho);

        let cz = Circuit::new(2, vec![Layer::GeneralizedCz(GeneralizedCzLayer { betas: vec![1.0] })]).unwrap();
        let ones = DensityMatrix::basis(2, 3);
        assert!(max_abs_diff(cz.forward(&ones).unwrap().matrix(), ones.matrix()) < 1e-15);
    }

    #[test]
    fn forward_matches_monolithic_unitary() {
        let circuit = build_dibom(3, 5, RngSeed(4)).unwrap();
        let rho = random_density(3, 8);
        let u = circuit.unitary().unwrap();
        assert!(unitarity_defect(&u) < 1e-10);
        let direct = &u * rho.matrix() * u.adjoint();
        let out = circuit.forward(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), &direct) < 1e-10);
        assert!((out.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dissipative_cases() {
        let rho = random_density(1, 2);
        let id = DissipativeModel {
            n_input: 1,
            n_hidden: 0,
            n_output: 1,
            circuit: Circuit::new(1 + 1, vec![Layer::GeneralUnitary(GeneralUnitaryLayer::identity(2))]).unwrap(),
        };
        let out = id.forward(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::basis(1, 0).matrix()) < 1e-12);

        // SWAP = exp(iπ/4 (XX + YY + ZZ - II)), dropping the identity phase
        let mut coefficients = vec![0.0; 15];
        for word in [5, 10, 15] {
            coefficients[word - 1] = std::f64::consts::FRAC_PI_4;
        }
        let swap = DissipativeModel {
            circuit: Circuit::new(2, vec![Layer::GeneralUnitary(GeneralUnitaryLayer { coefficients })]).unwrap(),
            ..id
        };
        let out = swap.forward(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-12);

        let random = build_dissipative(2, 1, 1, RngSeed(5)).unwrap();
        let out = random.forward(&random_density(2, 6)).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn conditional_without_measurement_is_plain_forward() {
        let pre = build_dibom(2, 3, RngSeed(2)).unwrap();
        let model = ConditionalModel::new(1, 1, pre.clone(), vec![], vec![Circuit::empty(2)]).unwrap();
        let rho = random_density(1, 4);
        let padded = rho.kron(&DensityMatrix::basis(1, 0));
        let expected = pre.forward(&padded).unwrap();
        assert!(max_abs_diff(model.forward(&rho).unwrap().matrix(), expected.matrix()) < 1e-12);
    }

    #[test]
    fn conditional_matches_explicit_kraus_sum() {
        let model = build_conditional_dibom(2, 1, 1, 4, 3, RngSeed(12)).unwrap();
        let rho = random_density(2, 21);
        let out = model.forward(&rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-9);

        // Oracle: Kraus operators K_i = V_i (⟨i|_0 ⊗ I) U_pre acting on ρ ⊗ |0⟩⟨0|.
        let u = model.pre.unitary().unwrap();
        let padded = rho.kron(&DensityMatrix::basis(1, 0));
        let mut expected = CMat::zeros(4, 4);
        for i in 0..2 {
            let bra = CMat::from_fn(1, 2, |_, col| if col == i { ONE } else { ZERO });
            let project = kron(&bra, &identity(4));
            let k = model.branches[i].unitary().unwrap() * project * &u;
            expected += &k * padded.matrix() * k.adjoint();
        }
        assert!(max_abs_diff(out.matrix(), &expected) < 1e-12);
    }

    #[test]
    fn conditional_rejects_missing_branch() {
        let pre = build_dibom(3, 1, RngSeed(0)).unwrap();
        let err = ConditionalModel::new(1, 2, pre, vec![0, 1], vec![Circuit::empty(1); 3]);
        assert!(matches!(err, Err(Error::MissingBranch(3))));
    }

    #[test]
    fn teleportation_is_identity() {
        let model = teleport_model();
        let pad = |rho: &DensityMatrix| rho.kron(&DensityMatrix::basis(2, 0));
        for idx in 0..2 {
            let rho = DensityMatrix::basis(1, idx);
            let out = model.forward(&pad(&rho)).unwrap();
            assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-12);
        }
        for seed in 0..100 {
            let psi = haar_state(1, RngSeed(seed)).projector();
            let f = fidelity(&model.forward(&pad(&psi)).unwrap(), &psi).unwrap();
            assert!((f - 1.0).abs() < 1e-9);
        }
        let mixed = random_density(1, 77);
        let out = model.forward(&pad(&mixed)).unwrap();
        assert!(max_abs_diff(out.matrix(), mixed.matrix()) < 1e-9);
    }

    #[test]
    fn single_cz_reduces_to_dibom() {
        let circuit = GateCircuit {
            n: 3,
            moments: vec![vec![Gate::Cz(0, 1)]],
        };
        let dibom = circuit_to_dibom(&circuit).unwrap();
        assert_eq!(dibom.layers.len(), 2);
        assert_eq!(dibom.layers[0], Layer::ProductRotation(ProductRotationLayer::identity(3)));
        assert_eq!(
            dibom.layers[1],
            Layer::GeneralizedCz(GeneralizedCzLayer {
                betas: vec![1.0, 0.0, 0.0]
            })
        );
        let empty = circuit_to_dibom(&GateCircuit { n: 3, moments: vec![] }).unwrap();
        assert!(empty.layers.is_empty());
    }

    #[test]
    fn circuit_to_dibom_preserves_unitary() {
        let mut rng = RngSeed(31).rng();
        let moments: Vec<Vec<Gate>> = (0..5)
            .map(|m| {
                if m % 2 == 0 {
                    (0..3)
                        .map(|q| Gate::Single {
                            target: q,
                            matrix: haar_unitary(2, RngSeed(rng.random())),
                        })
                        .collect()
                } else {
                    vec![
                        Gate::Cz(0, 2),
                        Gate::Single {
                            target: 1,
                            matrix: rotation_unitary(&[0.3, -1.0, 2.0]),
                        },
                    ]
                }
            })
            .collect();
        let circuit = GateCircuit { n: 3, moments };
        let dibom = circuit_to_dibom(&circuit).unwrap();
        assert!(dibom.layers.len() <= 2 * circuit.moments.len());
        let diff = max_abs_diff_up_to_phase(&circuit.unitary().unwrap(), &dibom.unitary().unwrap());
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn circuit_to_dibom_rejects_other_gates() {
        let circuit = GateCircuit {
            n: 2,
            moments: vec![vec![Gate::Other {
                name: "swap".into(),
                qubits: vec![0, 1],
                matrix: identity(4),
            }]],
        };
        assert!(matches!(circuit_to_dibom(&circuit), Err(Error::UnsupportedGate(_))));
    }

    #[test]
    fn model_json_roundtrip_is_bit_exact() {
        for kind in [
            ModelKind::Dibom,
            ModelKind::HardwareEfficient,
            ModelKind::IsingBornMachine,
            ModelKind::Dissipative {
                input: 1,
                hidden: 0,
                output: 1,
            },
        ] {
            let model = build_model(kind, 2, 5, RngSeed(42)).unwrap();
            let text = model.to_json().unwrap();
            let back = Model::from_json(&text).unwrap();
            assert_eq!(back, model);
            let bits = |m: &Model| m.network.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&back), bits(&model));
        }
        let cond = Model {
            kind: ModelKind::Conditional,
            n: 3,
            depth: 3,
            network: Network::Conditional(teleport_model()),
        };
        assert_eq!(Model::from_json(&cond.to_json().unwrap()).unwrap(), cond);
    }

    #[test]
    fn network_params_roundtrip() {
        let mut net = Network::Conditional(build_conditional_dibom(3, 0, 2, 3, 1, RngSeed(3)).unwrap());
        let params = net.params();
        assert_eq!(params.len(), net.num_params());
        let shifted: Vec<f64> = params.iter().map(|p| p + 0.5).collect();
        net.set_params(&shifted).unwrap();
        assert_eq!(net.params(), shifted);
        assert!(net.set_params(&params[1..]).is_err());
    }
}
