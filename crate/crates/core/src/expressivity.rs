//! Fidelity-based expressivity: the worst case over sampled target unitaries
//! of the best overlap an architecture reaches on sampled states.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Connectivity, GeneralUnitaryLayer, Layer};
use crate::linalg::{haar_state_rng, haar_unitary_rng, CMat, CVec, RngSeed};
use crate::network::{
    build_dibom, build_hardware_efficient, build_ising_born, count_parameters, Circuit, ModelKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Dibom,
    HardwareEfficient,
    IsingBornMachine,
    /// One general unitary layer.
    GeneralUnitary,
    /// Hadamards on every qubit; no parameters.
    Fixed,
}

impl Architecture {
    pub fn build(self, n: usize, depth: usize, seed: RngSeed) -> Result<Circuit> {
        match self {
            Architecture::Dibom => build_dibom(n, depth, seed),
            Architecture::HardwareEfficient => {
                build_hardware_efficient(n, depth, Connectivity::default(), seed)
            }
            Architecture::IsingBornMachine => build_ising_born(n, seed),
            Architecture::GeneralUnitary => {
                let mut rng = seed.rng();
                let count = (1usize << (2 * n)) - 1;
                let scale = std::f64::consts::PI / (1u64 << n) as f64;
                let coefficients = (0..count)
                    .map(|_| rng.random_range(-scale..scale))
                    .collect();
                Circuit::new(
                    n,
                    vec![Layer::GeneralUnitary(GeneralUnitaryLayer { coefficients })],
                )
            }
            Architecture::Fixed => Circuit::new(n, vec![Layer::Hadamard]),
        }
    }

    pub fn param_count(self, n: usize, depth: usize) -> u64 {
        match self {
            Architecture::Dibom => count_parameters(ModelKind::Dibom, n, depth),
            Architecture::HardwareEfficient => {
                count_parameters(ModelKind::HardwareEfficient, n, depth)
            }
            Architecture::IsingBornMachine => {
                count_parameters(ModelKind::IsingBornMachine, n, depth)
            }
            Architecture::GeneralUnitary => (1u64 << (2 * n)) - 1,
            Architecture::Fixed => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FbeConfig {
    /// Number of Haar target unitaries.
    pub k: usize,
    /// Number of Haar probe states.
    pub m: usize,
    pub restarts: usize,
    pub inner_iters: usize,
    /// Ascent step on the parameters.
    pub step: f64,
    /// Central-difference step of the gradient.
    pub fd_step: f64,
    pub seed: RngSeed,
}

impl Default for FbeConfig {
    fn default() -> Self {
        FbeConfig {
            k: 100,
            m: 10,
            restarts: 3,
            inner_iters: 200,
            step: 0.05,
            fd_step: 1e-5,
            seed: RngSeed(0),
        }
    }
}

impl FbeConfig {
    /// Reduced sample counts for quick runs.
    pub fn fast(seed: RngSeed) -> Self {
        FbeConfig {
            k: 20,
            m: 5,
            seed,
            ..FbeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("k", self.k),
            ("m", self.m),
            ("restarts", self.restarts),
            ("inner_iters", self.inner_iters),
        ] {
            if value == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if !(self.step > 0.0 && self.fd_step > 0.0) {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbeResult {
    /// `min_i s_i`, an upper bound on the expressivity.
    pub estimate: f64,
    pub scores: Vec<f64>,
    pub argmin: usize,
}

/// Overlap score `(1/m) Σ_j |⟨φ_j| A† U |φ_j⟩|` for fixed targets.
struct Target {
    probes: Vec<CVec>,
    images: Vec<CVec>,
}

impl Target {
    fn score(&self, a: &CMat) -> f64 {
        let total: f64 = self
            .probes
            .iter()
            .zip(&self.images)
            .map(|(phi, image)| (a * phi).dotc(image).norm())
            .sum();
        total / self.probes.len() as f64
    }
}

/// Products of layer unitaries before and after each layer, so a single
/// perturbed layer costs two multiplications.
struct Sandwich {
    before: Vec<CMat>,
    after: Vec<CMat>,
}

impl Sandwich {
    fn new(unitaries: &[CMat]) -> Self {
        let dim = unitaries.first().map_or(1, CMat::nrows);
        let len = unitaries.len();
        let mut before = vec![CMat::identity(dim, dim); len + 1];
        for l in 0..len {
            before[l + 1] = &unitaries[l] * &before[l];
        }
        let mut after = vec![CMat::identity(dim, dim); len + 1];
        for l in (0..len).rev() {
            after[l] = &after[l + 1] * &unitaries[l];
        }
        // after[l] = U_{L-1} ⋯ U_l; the factor to the left of layer l is after[l + 1]
        Sandwich { before, after }
    }

    fn total(&self) -> &CMat {
        &self.before[self.before.len() - 1]
    }

    fn with_layer(&self, l: usize, u: &CMat) -> CMat {
        &self.after[l + 1] * u * &self.before[l]
    }
}

fn check_finite(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("overlap score".into()))
    }
}

/// Best score reached by gradient ascent from the circuit's parameters.
/// The running maximum is returned, so more iterations never lower it.
fn ascend(circuit: &Circuit, target: &Target, config: &FbeConfig) -> Result<f64> {
    let n = circuit.n;
    let mut layers = circuit.layers.clone();
    let mut unitaries = layers
        .iter()
        .map(|l| l.unitary(n))
        .collect::<Result<Vec<_>>>()?;
    let mut best = check_finite(target.score(Sandwich::new(&unitaries).total()))?;
    if circuit.num_params() == 0 {
        return Ok(best);
    }
    for _ in 0..config.inner_iters {
        let sandwich = Sandwich::new(&unitaries);
        let mut gradient = Vec::with_capacity(layers.len());
        for (l, layer) in layers.iter().enumerate() {
            let params = layer.params();
            let mut g = vec![0.0; params.len()];
            let mut probe = layer.clone();
            for p in 0..params.len() {
                let mut shifted = params.clone();
                shifted[p] = params[p] + config.fd_step;
                probe.set_params(&shifted)?;
                let up = target.score(&sandwich.with_layer(l, &probe.unitary(n)?));
                shifted[p] = params[p] - config.fd_step;
                probe.set_params(&shifted)?;
                let down = target.score(&sandwich.with_layer(l, &probe.unitary(n)?));
                g[p] = (up - down) / (2.0 * config.fd_step);
            }
            gradient.push(g);
        }
        for (l, g) in gradient.iter().enumerate() {
            if g.is_empty() {
                continue;
            }
            let next: Vec<f64> = layers[l]
                .params()
                .iter()
                .zip(g)
                .map(|(p, d)| p + config.step * d)
                .collect();
            layers[l].set_params(&next)?;
            unitaries[l] = layers[l].unitary(n)?;
        }
        let value = check_finite(target.score(Sandwich::new(&unitaries).total()))?;
        best = best.max(value);
    }
    Ok(best)
}

/// Maximized score for target `index`; each target, probe set and restart
/// draws from its own derived stream.
fn target_score(
    architecture: Architecture,
    n: usize,
    depth: usize,
    config: &FbeConfig,
    index: usize,
) -> Result<f64> {
    let stream = config.seed.derive(index as u64);
    let mut rng = stream.derive(0).rng();
    let dim = 1usize << n;
    let u = haar_unitary_rng(dim, &mut rng);
    let probes: Vec<CVec> = (0..config.m)
        .map(|_| haar_state_rng(n, &mut rng).amplitudes().clone())
        .collect();
    let images = probes.iter().map(|phi| &u * phi).collect();
    let target = Target { probes, images };
    let mut best: f64 = 0.0;
    for r in 0..config.restarts {
        let circuit = architecture.build(n, depth, stream.derive(1 + r as u64))?;
        best = best.max(ascend(&circuit, &target, config)?);
    }
    Ok(best)
}

/// Upper bound `min_i max_θ s_i(θ)` on the fidelity-based expressivity.
pub fn fbe_upper_bound(
    architecture: Architecture,
    n: usize,
    depth: usize,
    config: &FbeConfig,
) -> Result<FbeResult> {
    config.validate()?;
    let scores = (0..config.k)
        .into_par_iter()
        .map(|i| target_score(architecture, n, depth, config, i))
        .collect::<Result<Vec<f64>>>()?;
    let (argmin, estimate) = scores
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    Ok(FbeResult {
        estimate,
        scores,
        argmin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    Estimated,
    /// Known value, not estimated.
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub layers: usize,
    pub params: u64,
    pub log10_params: f64,
    pub fbe: f64,
    pub seconds: f64,
    pub source: PointSource,
}

/// Depth of the three-qubit DIBoM reached by the universality construction.
pub const UNIVERSAL_DEPTH_3Q: usize = 2241;

/// DIBoM expressivity against parameter count over a grid of depths. For
/// three qubits the grid is bracketed by the parameter-free point and the
/// universal depth, both with known values.
pub fn frontier(n: usize, grid: &[usize], config: &FbeConfig) -> Result<Vec<FrontierPoint>> {
    if grid.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut estimates = Vec::with_capacity(grid.len());
    for &depth in grid {
        let start = std::time::Instant::now();
        let result = fbe_upper_bound(Architecture::Dibom, n, depth, config)?;
        estimates.push((depth, result.estimate, start.elapsed().as_secs_f64()));
    }
    Ok(frontier_points(n, &estimates))
}

/// Frontier rows from `(depth, estimate, seconds)` triples, with the known
/// endpoints added for three qubits.
pub fn frontier_points(n: usize, estimates: &[(usize, f64, f64)]) -> Vec<FrontierPoint> {
    let point = |layers: usize, fbe: f64, seconds: f64, source: PointSource| {
        let params = count_parameters(ModelKind::Dibom, n, layers);
        FrontierPoint {
            layers,
            params,
            log10_params: if params == 0 { 0.0 } else { (params as f64).log10() },
            fbe,
            seconds,
            source,
        }
    };
    let mut points = Vec::with_capacity(estimates.len() + 2);
    if n == 3 {
        points.push(point(0, 0.0, 0.0, PointSource::Analytic));
    }
    for &(depth, fbe, seconds) in estimates {
        points.push(point(depth, fbe, seconds, PointSource::Estimated));
    }
    if n == 3 {
        points.push(point(UNIVERSAL_DEPTH_3Q, 1.0, 0.0, PointSource::Analytic));
    }
    points
}
