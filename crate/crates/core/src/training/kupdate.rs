//! Closed-form layer generators `K^l` maximizing the regularized ascent
//! objective, and their family-preserving application `U ← exp(iεK) U`.

use crate::error::{Error, Result};
use crate::gates::{
    pair_projector_diagonal, pauli_coefficients, qubit_pairs, rotation_unitary, su2_params,
    GeneralUnitaryLayer, GeneralizedCzLayer, Layer, ProductRotationLayer, SingleQubitRotation,
};
use crate::linalg::{
    c, embed, hermitian_exp, hermitize, identity, partial_trace_op, unitary_log, CMat, CVec, I,
};

/// Layer-local form of a generator.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalGenerator {
    Single { target: usize, k: CMat },
    /// One 2×2 generator per qubit.
    Product { ks: Vec<CMat> },
    /// Coefficients of `|11⟩⟨11|_{jk}` in pair order.
    Gcz { coefficients: Vec<f64> },
    General { k: CMat },
}

/// A Hermitian generator `K` on the full register plus its layer-local form.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientUpdate {
    pub generator: CMat,
    pub local: LocalGenerator,
}

fn traceless(k: CMat) -> CMat {
    let dim = k.nrows();
    let shift = k.trace() / c(dim as f64, 0.0);
    hermitize(&(k - identity(dim) * shift))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `K = i tr_rest(G)/λ` on `target`.
pub fn k_update_single(g: &CMat, n: usize, target: usize, lambda: f64) -> Result<GradientUpdate> {
    check_lambda(lambda)?;
    let k = traceless(partial_trace_op(g, n, &[target])? * (I / lambda));
    Ok(GradientUpdate {
        generator: embed(&k, &[target], n)?,
        local: LocalGenerator::Single { target, k },
    })
}

/// `K = Σ_j i tr_{[n]∖j}(G)/λ`, one commuting term per qubit.
pub fn k_update_product(g: &CMat, n: usize, lambda: f64) -> Result<GradientUpdate> {
    check_lambda(lambda)?;
    let dim = 1 << n;
    let mut generator = CMat::zeros(dim, dim);
    let mut ks = Vec::with_capacity(n);
    for j in 0..n {
        let k = traceless(partial_trace_op(g, n, &[j])? * (I / lambda));
        generator += embed(&k, &[j], n)?;
        ks.push(k);
    }
    Ok(GradientUpdate {
        generator,
        local: LocalGenerator::Product { ks },
    })
}

/// `K = Σ_{j<k} κ_jk |11⟩⟨11|_jk` with `κ_jk = i tr(G |11⟩⟨11|_jk)/2λ`.
pub fn k_update_gcz(g: &CMat, n: usize, lambda: f64) -> Result<GradientUpdate> {
    check_lambda(lambda)?;
    let dim = 1 << n;
    let mut diagonal = vec![0.0; dim];
    let coefficients: Vec<f64> = qubit_pairs(n)
        .iter()
        .map(|&(j, k)| {
            let mask = pair_projector_diagonal(n, j, k);
            let tr: crate::linalg::C64 = (0..dim).filter(|&d| mask[d] > 0.0).map(|d| g[(d, d)]).sum();
            let kappa = (I * tr).re / (2.0 * lambda);
            for (d, m) in diagonal.iter_mut().zip(&mask) {
                *d += kappa * m;
            }
            kappa
        })
        .collect();
    Ok(GradientUpdate {
        generator: CMat::from_diagonal(&CVec::from_iterator(
            dim,
            diagonal.iter().map(|&d| c(d, 0.0)),
        )),
        local: LocalGenerator::Gcz { coefficients },
    })
}

/// `K = i 2^{n−1} G/λ` with the identity component removed.
pub fn k_update_general(g: &CMat, n: usize, lambda: f64) -> Result<GradientUpdate> {
    check_lambda(lambda)?;
    let scale = (1u64 << (n - 1)) as f64 / lambda;
    let k = traceless(g * (I * scale));
    Ok(GradientUpdate {
        generator: k.clone(),
        local: LocalGenerator::General { k },
    })
}

/// Generator matching the layer's family, or `None` for fixed layers.
pub fn k_update(layer: &Layer, g: &CMat, n: usize, lambda: f64) -> Result<Option<GradientUpdate>> {
    Ok(match layer {
        Layer::SingleQubit(r) => Some(k_update_single(g, n, r.target, lambda)?),
        Layer::ProductRotation(_) => Some(k_update_product(g, n, lambda)?),
        Layer::GeneralizedCz(_) => Some(k_update_gcz(g, n, lambda)?),
        Layer::GeneralUnitary(_) => Some(k_update_general(g, n, lambda)?),
        Layer::FixedCz(_) | Layer::Hadamard => None,
    })
}

fn rotate(alpha: &[f64; 3], k: &CMat, eps: f64) -> Result<[f64; 3]> {
    let u = hermitian_exp(k, eps)? * rotation_unitary(alpha);
    Ok(su2_params(&u))
}

impl GradientUpdate {
    /// The layer after `U ← exp(iεK) U`, kept inside its family.
    pub fn apply(&self, layer: &Layer, eps: f64) -> Result<Layer> {
        let mismatch = || Error::InvalidArgument(format!("generator does not fit a {} layer", layer.name()));
        Ok(match (layer, &self.local) {
            (Layer::SingleQubit(r), LocalGenerator::Single { target, k }) if r.target == *target => {
                Layer::SingleQubit(SingleQubitRotation {
                    target: r.target,
                    alpha: rotate(&r.alpha, k, eps)?,
                })
            }
            (Layer::ProductRotation(p), LocalGenerator::Product { ks }) if ks.len() == p.alphas.len() => {
                Layer::ProductRotation(ProductRotationLayer {
                    alphas: p
                        .alphas
                        .iter()
                        .zip(ks)
                        .map(|(a, k)| rotate(a, k, eps))
                        .collect::<Result<_>>()?,
                })
            }
            (Layer::GeneralizedCz(g), LocalGenerator::Gcz { coefficients })
                if coefficients.len() == g.betas.len() =>
            {
                // exp(iεκ|11⟩⟨11|) exp(−iπβ|11⟩⟨11|) = exp(−iπ(β − εκ/π)|11⟩⟨11|)
                Layer::GeneralizedCz(GeneralizedCzLayer {
                    betas: g
                        .betas
                        .iter()
                        .zip(coefficients)
                        .map(|(b, k)| b - eps * k / std::f64::consts::PI)
                        .collect(),
                })
            }
            (Layer::GeneralUnitary(g), LocalGenerator::General { k }) => {
                let n = crate::linalg::qubits_for_dim(k.nrows())?;
                let u = hermitian_exp(k, eps)? * layer.unitary(n)?;
                let coefficients = pauli_coefficients(n, &unitary_log(&u)?);
                if coefficients.len() != g.coefficients.len() {
                    return Err(mismatch());
                }
                Layer::GeneralUnitary(GeneralUnitaryLayer { coefficients })
            }
            _ => return Err(mismatch()),
        })
    }

    /// Parameter change produced by a step of size `eps`.
    pub fn param_delta(&self, layer: &Layer, eps: f64) -> Result<Vec<f64>> {
        let after = self.apply(layer, eps)?.params();
        Ok(after.iter().zip(layer.params()).map(|(a, b)| a - b).collect())
    }
}
