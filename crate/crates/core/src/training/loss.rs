use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::linalg::{
    embed, embed_outcome_block, partial_trace, CMat, PureState,
};
use crate::network::{Circuit, Network};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Global,
    /// Mean single-qubit marginal overlap of the reversed effective input;
    /// requires product-form inputs.
    Local,
}

const PRODUCT_PURITY_TOL: f64 = 1e-10;

/// `(1/n) Σ_y |ψ_y⟩⟨ψ_y| ⊗ I_ȳ` for a product input `|ψ_1⟩ ⊗ ⋯ ⊗ |ψ_n⟩`.
pub fn local_input_operator(input: &PureState, index: usize) -> Result<CMat> {
    let n = input.n_qubits();
    let rho = input.projector();
    let dim = 1 << n;
    let mut out = CMat::zeros(dim, dim);
    for y in 0..n {
        let marginal = partial_trace(&rho, &[y])?;
        let purity = marginal.purity();
        if purity < 1.0 - PRODUCT_PURITY_TOL {
            return Err(Error::NonProductInput { index, purity });
        }
        out += embed(marginal.matrix(), &[y], n)?;
    }
    Ok(out / crate::linalg::c(n as f64, 0.0))
}

/// Operators of the ascent objective `C = (1/N) Σ_x tr(B_x U A_x U†)` for
/// one circuit segment, `U` being that segment's unitary.
pub(crate) struct SegmentTerms {
    pub inputs: Vec<CMat>,
    pub observables: Vec<CMat>,
}

fn check_samples(network: &Network, samples: &[Sample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in samples {
        if s.input.n_qubits() != network.n_input() {
            return Err(Error::DimensionMismatch {
                expected: 1 << network.n_input(),
                actual: s.input.dim(),
            });
        }
        if s.label.n_qubits() != network.n_output() {
            return Err(Error::DimensionMismatch {
                expected: 1 << network.n_output(),
                actual: s.label.dim(),
            });
        }
    }
    Ok(())
}

fn label_projector(s: &Sample) -> CMat {
    s.label.projector().into_matrix()
}

/// Objective terms for every segment of the network, in segment order.
pub(crate) fn segment_terms(
    network: &Network,
    samples: &[Sample],
    kind: LossKind,
) -> Result<Vec<SegmentTerms>> {
    check_samples(network, samples)?;
    if kind == LossKind::Local && !matches!(network, Network::Circuit(_)) {
        return Err(Error::Unsupported(
            "the local loss is defined for plain circuits only".into(),
        ));
    }
    match network {
        Network::Circuit(_) => {
            let inputs = samples
                .par_iter()
                .enumerate()
                .map(|(idx, s)| match kind {
                    LossKind::Global => Ok(s.input.projector().into_matrix()),
                    LossKind::Local => local_input_operator(&s.input, idx),
                })
                .collect::<Result<Vec<_>>>()?;
            let observables = samples.iter().map(label_projector).collect();
            Ok(vec![SegmentTerms {
                inputs,
                observables,
            }])
        }
        Network::Dissipative(d) => {
            let outputs = d.output_qubits();
            let inputs = samples
                .iter()
                .map(|s| Ok(d.padded_input(&s.input.projector())?.into_matrix()))
                .collect::<Result<Vec<_>>>()?;
            let observables = samples
                .iter()
                .map(|s| embed(&label_projector(s), &outputs, d.n_total()))
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![SegmentTerms {
                inputs,
                observables,
            }])
        }
        Network::Conditional(m) => {
            m.validate()?;
            let n = m.n_total();
            let branch_unitaries = m
                .branches
                .iter()
                .map(Circuit::unitary)
                .collect::<Result<Vec<_>>>()?;
            let per_sample = samples
                .par_iter()
                .map(|s| {
                    let padded = m.padded_input(&s.input.projector())?;
                    let blocks = m.outcome_blocks(&s.input.projector())?;
                    let label = label_projector(s);
                    let mut pulled = CMat::zeros(1 << n, 1 << n);
                    for (i, v) in branch_unitaries.iter().enumerate() {
                        let back = v.adjoint() * &label * v;
                        pulled += embed_outcome_block(&back, &m.measured, i, n)?;
                    }
                    Ok((padded.into_matrix(), pulled, blocks, label))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut segments = vec![SegmentTerms {
                inputs: per_sample.iter().map(|p| p.0.clone()).collect(),
                observables: per_sample.iter().map(|p| p.1.clone()).collect(),
            }];
            for i in 0..m.n_outcomes() {
                segments.push(SegmentTerms {
                    inputs: per_sample.iter().map(|p| p.2[i].clone()).collect(),
                    observables: per_sample.iter().map(|p| p.3.clone()).collect(),
                });
            }
            Ok(segments)
        }
    }
}

/// `1 − (1/N) Σ_x ⟨φ_x| ρ_out^x |φ_x⟩`.
pub fn global_loss(network: &Network, samples: &[Sample]) -> Result<f64> {
    check_samples(network, samples)?;
    let overlaps = samples
        .par_iter()
        .map(|s| {
            let out = network.forward(&s.input.projector())?;
            Ok(s.label.expectation(out.matrix()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(1.0 - overlaps.iter().sum::<f64>() / samples.len() as f64)
}

/// `1 − (1/nN) Σ_x Σ_y tr((|ψ_y⟩⟨ψ_y| ⊗ I) U†|φ_x⟩⟨φ_x|U)`.
pub fn local_loss(network: &Network, samples: &[Sample]) -> Result<f64> {
    check_samples(network, samples)?;
    let Network::Circuit(circuit) = network else {
        return Err(Error::Unsupported(
            "the local loss is defined for plain circuits only".into(),
        ));
    };
    let u = circuit.unitary()?;
    let overlaps = samples
        .par_iter()
        .enumerate()
        .map(|(idx, s)| {
            let a = local_input_operator(&s.input, idx)?;
            // reversed effective input U†|φ⟩
            let reversed = u.adjoint() * s.label.amplitudes();
            Ok(reversed.dotc(&(a * &reversed)).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(1.0 - overlaps.iter().sum::<f64>() / samples.len() as f64)
}

pub fn loss(network: &Network, samples: &[Sample], kind: LossKind) -> Result<f64> {
    let value = match kind {
        LossKind::Global => global_loss(network, samples),
        LossKind::Local => local_loss(network, samples),
    }?;
    if !value.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    Ok(value)
}
