//! Commutator gradients of the ascent objective `C = 1 − loss`.
//!
//! Perturbing layer `l` as `U_l → exp(iεK) U_l` changes `C` at rate
//! `i tr(K M^l)` with `M^l = [F_l, B_l]`, where `F_l` is the input operator
//! propagated through layers `1..=l` and `B_l` the observable propagated
//! backwards through layers `L..l+1`.

use rayon::prelude::*;

use super::loss::{loss, segment_terms, LossKind, SegmentTerms};
use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::gates::{pair_projector_diagonal, pauli_word_matrix, rotation_derivatives, rotation_unitary, Layer};
use crate::linalg::{c, embed, hermitian_eigen, partial_trace_op, CMat, C64, I};
use crate::network::{Circuit, LayerId, Network};

/// `M^l` for every layer of one segment and one sample.
fn sample_commutators(unitaries: &[CMat], a: &CMat, b: &CMat) -> Vec<CMat> {
    let depth = unitaries.len();
    let mut forward = Vec::with_capacity(depth);
    let mut state = a.clone();
    for u in unitaries {
        state = u * &state * u.adjoint();
        forward.push(state.clone());
    }
    let mut backward = vec![CMat::zeros(0, 0); depth];
    let mut obs = b.clone();
    for l in (0..depth).rev() {
        backward[l] = obs.clone();
        obs = unitaries[l].adjoint() * &obs * &unitaries[l];
    }
    forward
        .iter()
        .zip(&backward)
        .map(|(f, b)| f * b - b * f)
        .collect()
}

/// Sample-averaged `G^l = (1/N) Σ_x M_x^l` for every layer of a segment.
/// Per-sample work runs in parallel; the reduction follows sample order.
fn segment_average(circuit: &Circuit, terms: &SegmentTerms) -> Result<Vec<CMat>> {
    let unitaries = circuit.layer_unitaries()?;
    let per_sample: Vec<Vec<CMat>> = terms
        .inputs
        .par_iter()
        .zip(&terms.observables)
        .map(|(a, b)| sample_commutators(&unitaries, a, b))
        .collect();
    let dim = 1 << circuit.n;
    let count = per_sample.len() as f64;
    let mut sums = vec![CMat::zeros(dim, dim); unitaries.len()];
    for sample in &per_sample {
        for (acc, m) in sums.iter_mut().zip(sample) {
            *acc += m;
        }
    }
    Ok(sums.into_iter().map(|s| s / c(count, 0.0)).collect())
}

/// Averaged commutators `G^l` for every layer, grouped by segment.
pub fn layer_gradients(
    network: &Network,
    samples: &[Sample],
    kind: LossKind,
) -> Result<Vec<Vec<CMat>>> {
    let terms = segment_terms(network, samples, kind)?;
    network
        .segments()
        .iter()
        .zip(&terms)
        .map(|(circuit, t)| segment_average(circuit, t))
        .collect()
}

/// `M^l` of one sample at one layer.
pub fn compute_m(
    network: &Network,
    sample: &Sample,
    kind: LossKind,
    id: LayerId,
) -> Result<CMat> {
    let terms = segment_terms(network, std::slice::from_ref(sample), kind)?;
    let circuit = network.segments()[id.segment];
    let unitaries = circuit.layer_unitaries()?;
    let t = &terms[id.segment];
    Ok(sample_commutators(&unitaries, &t.inputs[0], &t.observables[0]).swap_remove(id.layer))
}

/// `dC/ds = i Σ_l tr(G^l K^l)` for generators on the listed layers.
pub fn directional_derivative(
    gradients: &[Vec<CMat>],
    directions: &[(LayerId, CMat)],
) -> f64 {
    directions
        .iter()
        .map(|(id, k)| (I * (&gradients[id.segment][id.layer] * k).trace()).re)
        .sum()
}

/// Generators `K_θ = −i (∂U/∂θ) U†` for every parameter of a layer.
fn parameter_generators(layer: &Layer, n: usize) -> Result<Vec<CMat>> {
    let small = |alpha: &[f64; 3]| -> Vec<CMat> {
        let u = rotation_unitary(alpha);
        rotation_derivatives(alpha)
            .iter()
            .map(|d| d * u.adjoint() * (-I))
            .collect()
    };
    Ok(match layer {
        Layer::SingleQubit(r) => small(&r.alpha)
            .iter()
            .map(|k| embed(k, &[r.target], n))
            .collect::<Result<_>>()?,
        Layer::ProductRotation(p) => {
            let mut out = Vec::with_capacity(3 * n);
            for (q, alpha) in p.alphas.iter().enumerate() {
                for k in small(alpha) {
                    out.push(embed(&k, &[q], n)?);
                }
            }
            out
        }
        Layer::GeneralizedCz(_) => crate::gates::qubit_pairs(n)
            .iter()
            .map(|&(j, k)| {
                let diag = pair_projector_diagonal(n, j, k);
                CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
                    diag.len(),
                    diag.iter().map(|&d| c(-std::f64::consts::PI * d, 0.0)),
                ))
            })
            .collect(),
        Layer::FixedCz(_) | Layer::Hadamard => Vec::new(),
        Layer::GeneralUnitary(g) => {
            // Fréchet derivative of exp(iH) in the eigenbasis of H.
            let h = crate::gates::pauli_generator(n, &g.coefficients);
            let (values, vectors) = hermitian_eigen(&h)?;
            let dim = values.len();
            let divided = CMat::from_fn(dim, dim, |a, b| {
                let (la, lb) = (values[a], values[b]);
                let ea = C64::from_polar(1.0, la);
                if (la - lb).abs() < 1e-12 {
                    I * ea
                } else {
                    (ea - C64::from_polar(1.0, lb)) / (la - lb)
                }
            });
            let phases = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
                dim,
                values.iter().map(|&v| C64::from_polar(1.0, -v)),
            ));
            (1..dim * dim)
                .map(|word| {
                    let e = vectors.adjoint() * pauli_word_matrix(n, word) * &vectors;
                    let d = e.component_mul(&divided);
                    // K = −i V (Γ∘E) V† V e^{-iΛ} V† = −i V (Γ∘E) e^{-iΛ} V†
                    &vectors * (d * &phases) * vectors.adjoint() * (-I)
                })
                .collect()
        }
    })
}

/// Analytic `∂loss/∂θ` over the network's flat parameter vector.
pub fn param_gradient(network: &Network, samples: &[Sample], kind: LossKind) -> Result<Vec<f64>> {
    let gradients = layer_gradients(network, samples, kind)?;
    let mut out = Vec::with_capacity(network.num_params());
    for (segment, circuit) in network.segments().iter().enumerate() {
        for (l, layer) in circuit.layers.iter().enumerate() {
            let g = &gradients[segment][l];
            if let Layer::ProductRotation(_) | Layer::SingleQubit(_) = layer {
                // trace against 2×2 generators through the single-qubit marginal of G
                let targets: Vec<usize> = match layer {
                    Layer::SingleQubit(r) => vec![r.target],
                    _ => (0..circuit.n).collect(),
                };
                let alphas: Vec<[f64; 3]> = match layer {
                    Layer::SingleQubit(r) => vec![r.alpha],
                    Layer::ProductRotation(p) => p.alphas.clone(),
                    _ => unreachable!(),
                };
                for (q, alpha) in targets.iter().zip(&alphas) {
                    let reduced = partial_trace_op(g, circuit.n, &[*q])?;
                    let u = rotation_unitary(alpha);
                    for d in rotation_derivatives(alpha) {
                        let k = d * u.adjoint() * (-I);
                        out.push(-(I * (&reduced * k).trace()).re);
                    }
                }
                continue;
            }
            for k in parameter_generators(layer, circuit.n)? {
                out.push(-(I * (g * k).trace()).re);
            }
        }
    }
    Ok(out)
}

fn shifted_loss(
    network: &Network,
    samples: &[Sample],
    kind: LossKind,
    coordinate: usize,
    delta: f64,
) -> Result<f64> {
    let mut params = network.params();
    if coordinate >= params.len() {
        return Err(Error::InvalidArgument(format!(
            "parameter {coordinate} out of range ({} parameters)",
            params.len()
        )));
    }
    params[coordinate] += delta;
    let mut shifted = network.clone();
    shifted.set_params(&params)?;
    loss(&shifted, samples, kind)
}

/// Backward difference `(L(y) − L(y − ε))/ε` in one parameter coordinate.
pub fn finite_diff_grad(
    network: &Network,
    samples: &[Sample],
    kind: LossKind,
    coordinate: usize,
    epsilon: f64,
) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let here = shifted_loss(network, samples, kind, coordinate, 0.0)?;
    let before = shifted_loss(network, samples, kind, coordinate, -epsilon)?;
    Ok((here - before) / epsilon)
}

/// Central difference `(L(y + ε) − L(y − ε))/2ε`.
pub fn finite_diff_grad_central(
    network: &Network,
    samples: &[Sample],
    kind: LossKind,
    coordinate: usize,
    epsilon: f64,
) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let after = shifted_loss(network, samples, kind, coordinate, epsilon)?;
    let before = shifted_loss(network, samples, kind, coordinate, -epsilon)?;
    Ok((after - before) / (2.0 * epsilon))
}
