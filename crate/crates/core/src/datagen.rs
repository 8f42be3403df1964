//! Synthetic datasets generated by hidden intrinsic unitaries.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gates::{
    pair_count, rotation_unitary, GeneralizedCzLayer, Layer, ProductRotationLayer,
};
use crate::linalg::{
    c, embed, haar_state_rng, haar_unitary_rng, CMat, CVec, PureState, RngSeed, C64,
};
use crate::network::build_dibom;

/// Family of the hidden unitary `V` that maps inputs to labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IntrinsicSpec {
    /// Random rotation on qubit 1 (the second qubit).
    SingleQubitOnQ2,
    GczLayer,
    /// Rotation on qubit 1 followed by a generalized-CZ layer.
    SingleQubitTimesGcz,
    /// Product rotation layer followed by a generalized-CZ layer.
    ProductThenGcz,
    /// DIBoM circuit of the given depth with random parameters.
    DibomShape { layers: usize },
    /// Product and generalized-CZ layers alternating, `layers` in total.
    AlternatingStack { layers: usize },
    HaarRandom,
    /// Inputs `|ψ⟩|0⟩|0⟩`, labels `|ψ⟩`.
    TeleportationTask,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    Haar,
    /// Tensor products of independent Haar single-qubit states.
    ProductForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: PureState,
    pub label: PureState,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub ratio: f64,
    pub seed: RngSeed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub ratio: f64,
    pub seed: RngSeed,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: Option<IntrinsicSpec>,
    pub seed: RngSeed,
    pub input_kind: InputKind,
    /// The hidden unitary; never handed to a trainer.
    #[serde(with = "matrix_serde")]
    pub intrinsic: Option<CMat>,
    #[serde(default)]
    pub corruption: Option<CorruptionRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n_in: usize,
    pub n_out: usize,
    pub samples: Vec<Sample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.samples {
            if s.input.n_qubits() != self.n_in {
                return Err(Error::DimensionMismatch {
                    expected: 1 << self.n_in,
                    actual: s.input.dim(),
                });
            }
            if s.label.n_qubits() != self.n_out {
                return Err(Error::DimensionMismatch {
                    expected: 1 << self.n_out,
                    actual: s.label.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: Dataset = serde_json::from_str(text)?;
        data.validate()?;
        Ok(data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn random_alpha(rng: &mut impl Rng) -> [f64; 3] {
    let pi = std::f64::consts::PI;
    std::array::from_fn(|_| rng.random_range(-pi..=pi))
}

fn random_gcz(n: usize, rng: &mut impl Rng) -> Result<CMat> {
    Layer::GeneralizedCz(GeneralizedCzLayer {
        betas: (0..pair_count(n)).map(|_| rng.random_range(0.0..=1.0)).collect(),
    })
    .unitary(n)
}

fn need_qubits(spec: IntrinsicSpec, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!(
            "{spec:?} needs at least {min} qubits, got {n}"
        )));
    }
    Ok(())
}

/// The hidden unitary of `spec` on `n` qubits, drawn from `seed`.
pub fn intrinsic_unitary(spec: IntrinsicSpec, n: usize, seed: RngSeed) -> Result<CMat> {
    let mut rng = seed.rng();
    match spec {
        IntrinsicSpec::SingleQubitOnQ2 => {
            need_qubits(spec, n, 2)?;
            embed(&rotation_unitary(&random_alpha(&mut rng)), &[1], n)
        }
        IntrinsicSpec::GczLayer => {
            need_qubits(spec, n, 2)?;
            random_gcz(n, &mut rng)
        }
        IntrinsicSpec::SingleQubitTimesGcz => {
            need_qubits(spec, n, 2)?;
            let single = embed(&rotation_unitary(&random_alpha(&mut rng)), &[1], n)?;
            Ok(random_gcz(n, &mut rng)? * single)
        }
        IntrinsicSpec::ProductThenGcz => {
            need_qubits(spec, n, 1)?;
            let product = Layer::ProductRotation(ProductRotationLayer {
                alphas: (0..n).map(|_| random_alpha(&mut rng)).collect(),
            })
            .unitary(n)?;
            Ok(random_gcz(n, &mut rng)? * product)
        }
        IntrinsicSpec::DibomShape { layers } | IntrinsicSpec::AlternatingStack { layers } => {
            need_qubits(spec, n, 1)?;
            build_dibom(n, layers, seed)?.unitary()
        }
        IntrinsicSpec::HaarRandom => {
            need_qubits(spec, n, 1)?;
            Ok(haar_unitary_rng(1 << n, &mut rng))
        }
        IntrinsicSpec::TeleportationTask => Err(Error::InvalidArgument(
            "the teleportation task has no square intrinsic unitary".into(),
        )),
    }
}

/// Product of independent Haar single-qubit states.
pub fn product_state_rng(n: usize, rng: &mut impl Rng) -> PureState {
    (1..n).fold(haar_state_rng(1, rng), |acc, _| acc.kron(&haar_state_rng(1, rng)))
}

pub fn product_form_samples(n: usize, count: usize, seed: RngSeed) -> Vec<PureState> {
    let mut rng = seed.rng();
    (0..count).map(|_| product_state_rng(n, &mut rng)).collect()
}

fn draw_inputs(kind: InputKind, n: usize, count: usize, seed: RngSeed) -> Vec<PureState> {
    let mut rng = seed.rng();
    (0..count)
        .map(|_| match kind {
            InputKind::Haar => haar_state_rng(n, &mut rng),
            InputKind::ProductForm => product_state_rng(n, &mut rng),
        })
        .collect()
}

/// Labels `V|ψ⟩` for seeded inputs of the given kind.
pub fn gen_dataset_from_unitary(
    v: &CMat,
    count: usize,
    input_kind: InputKind,
    seed: RngSeed,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = crate::linalg::qubits_for_dim(v.nrows())?;
    let samples = draw_inputs(input_kind, n, count, seed)
        .into_iter()
        .map(|input| {
            let label = input.evolve(v)?;
            Ok(Sample { input, label })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        n_in: n,
        n_out: n,
        samples,
        provenance: Provenance {
            spec: None,
            seed,
            input_kind,
            intrinsic: Some(v.clone()),
            corruption: None,
        },
    })
}

/// `count` samples with Haar inputs; the hidden unitary is drawn from
/// `seed.derive(0)` and the inputs from `seed.derive(1)`.
pub fn gen_dataset(spec: IntrinsicSpec, n: usize, count: usize, seed: RngSeed) -> Result<Dataset> {
    gen_dataset_with_inputs(spec, n, count, InputKind::Haar, seed)
}

pub fn gen_dataset_with_inputs(
    spec: IntrinsicSpec,
    n: usize,
    count: usize,
    input_kind: InputKind,
    seed: RngSeed,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    if spec == IntrinsicSpec::TeleportationTask {
        return teleportation_dataset(count, seed);
    }
    let v = intrinsic_unitary(spec, n, seed.derive(0))?;
    let mut data = gen_dataset_from_unitary(&v, count, input_kind, seed.derive(1))?;
    data.provenance.spec = Some(spec);
    data.provenance.seed = seed;
    Ok(data)
}

fn teleportation_dataset(count: usize, seed: RngSeed) -> Result<Dataset> {
    let ancilla = PureState::basis(2, 0);
    let mut rng = seed.derive(1).rng();
    let samples = (0..count)
        .map(|_| {
            let psi = haar_state_rng(1, &mut rng);
            Sample {
                input: psi.kron(&ancilla),
                label: psi,
            }
        })
        .collect();
    Ok(Dataset {
        n_in: 3,
        n_out: 1,
        samples,
        provenance: Provenance {
            spec: Some(IntrinsicSpec::TeleportationTask),
            seed,
            input_kind: InputKind::Haar,
            intrinsic: None,
            corruption: None,
        },
    })
}

/// Seeded disjoint partition; the first part holds `round(fraction · N)` samples.
pub fn split(data: &Dataset, train_fraction: f64, seed: RngSeed) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let count = data.len();
    let first = (train_fraction * count as f64).round() as usize;
    if first == 0 || first == count {
        return Err(Error::InvalidArgument(format!(
            "split of {count} samples at {train_fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut seed.rng());
    let (a, b) = order.split_at(first);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let subset = |idx: &[usize]| Dataset {
        samples: idx.iter().map(|&i| data.samples[i].clone()).collect(),
        ..data.clone()
    };
    Ok((subset(&a), subset(&b)))
}

/// Replaces `⌊ratio · N⌋` seeded-chosen samples with independent Haar
/// (input, label) pairs.
pub fn corrupt(data: &Dataset, config: &CorruptionConfig) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&config.ratio) {
        return Err(Error::InvalidArgument(format!(
            "corruption ratio {} outside [0, 1]",
            config.ratio
        )));
    }
    let count = (config.ratio * data.len() as f64).floor() as usize;
    let mut rng = config.seed.rng();
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let mut indices = order[..count].to_vec();
    indices.sort_unstable();
    let mut out = data.clone();
    for &i in &indices {
        out.samples[i] = Sample {
            input: haar_state_rng(data.n_in, &mut rng),
            label: haar_state_rng(data.n_out, &mut rng),
        };
    }
    out.provenance.corruption = Some(CorruptionRecord {
        ratio: config.ratio,
        seed: config.seed,
        indices,
    });
    Ok(out)
}

/// Amplitudes as `[re, im]` pairs, written in shortest round-trip form.
impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes().iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let amps = CVec::from_iterator(pairs.len(), pairs.iter().map(|p| c(p[0], p[1])));
        PureState::new(amps).map_err(serde::de::Error::custom)
    }
}

mod matrix_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &Option<CMat>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows: Option<Vec<Vec<[f64; 2]>>> = m.as_ref().map(|m| {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
                .collect()
        });
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<CMat>, D::Error> {
        let rows = Option::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        rows.map(|rows| {
            let dim = rows.len();
            if rows.iter().any(|r| r.len() != dim) {
                return Err(serde::de::Error::custom("intrinsic unitary is not square"));
            }
            Ok(CMat::from_fn(dim, dim, |r, col| {
                let [re, im] = rows[r][col];
                C64::new(re, im)
            }))
        })
        .transpose()
    }
}
