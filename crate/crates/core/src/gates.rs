//! Parametrized layers and their unitaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, embed, hadamard, hermitian_exp, identity, kron_all, pauli, CMat, CVec, DensityMatrix,
    PureState, C64, I, ONE,
};

/// `exp(i(α₁σ₁ + α₂σ₂ + α₃σ₃))` on one qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitRotation {
    pub target: usize,
    pub alpha: [f64; 3],
}

/// One rotation per qubit, `alphas[q]` acting on qubit `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductRotationLayer {
    pub alphas: Vec<[f64; 3]>,
}

/// `exp(-iπ Σ_{j<k} β_jk |11⟩⟨11|_jk)`; `betas` follows [`qubit_pairs`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCzLayer {
    pub betas: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    Linear,
    #[default]
    AllToAll,
}

/// Plain CZ gates on a fixed set of pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedCzLayer {
    pub pairs: Vec<(usize, usize)>,
    pub connectivity: Connectivity,
}

/// `exp(i Σ_w α_w P_w)` over all non-identity Pauli words `P_w`.
///
/// Word `w` (1 ≤ w < 4ⁿ) is read in base 4 with qubit 0 as the most
/// significant digit; digits 0..3 select I, X, Y, Z. `coefficients[w - 1]`
/// multiplies word `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralUnitaryLayer {
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    SingleQubit(SingleQubitRotation),
    ProductRotation(ProductRotationLayer),
    GeneralizedCz(GeneralizedCzLayer),
    FixedCz(FixedCzLayer),
    Hadamard,
    GeneralUnitary(GeneralUnitaryLayer),
}

/// Unordered qubit pairs `(j, k)`, `j < k`, in lexicographic order.
pub fn qubit_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .collect()
}

pub fn pair_index(n: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j < k { (j, k) } else { (k, j) };
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn bit(n: usize, index: usize, qubit: usize) -> bool {
    index >> (n - 1 - qubit) & 1 == 1
}

/// `exp(i α·σ) = cos|α| I + i sin|α| (α̂·σ)`.
pub fn rotation_unitary(alpha: &[f64; 3]) -> CMat {
    let a = (alpha[0] * alpha[0] + alpha[1] * alpha[1] + alpha[2] * alpha[2]).sqrt();
    let sinc = if a < 1e-8 { 1.0 - a * a / 6.0 } else { a.sin() / a };
    let (x, y, z) = (alpha[0] * sinc, alpha[1] * sinc, alpha[2] * sinc);
    let cs = a.cos();
    // cos a I + i (x X + y Y + z Z)
    CMat::from_row_slice(
        2,
        2,
        &[c(cs, z), c(y, x), c(-y, x), c(cs, -z)],
    )
}

/// Partial derivatives `∂U/∂α_k` of [`rotation_unitary`].
pub fn rotation_derivatives(alpha: &[f64; 3]) -> [CMat; 3] {
    let a2 = alpha[0] * alpha[0] + alpha[1] * alpha[1] + alpha[2] * alpha[2];
    let a = a2.sqrt();
    // f(a) = sin a / a, g(a) = f'(a) / a
    let (f, g) = if a < 1e-4 {
        (1.0 - a2 / 6.0, -1.0 / 3.0 + a2 / 30.0)
    } else {
        (a.sin() / a, (a * a.cos() - a.sin()) / (a2 * a))
    };
    let generator = pauli(1) * c(alpha[0], 0.0) + pauli(2) * c(alpha[1], 0.0) + pauli(3) * c(alpha[2], 0.0);
    std::array::from_fn(|k| {
        identity(2) * c(-f * alpha[k], 0.0)
            + &generator * (I * g * alpha[k])
            + pauli(k + 1) * (I * f)
    })
}

/// Rotation parameters reproducing `u` up to a global phase.
pub fn su2_params(u: &CMat) -> [f64; 3] {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let v = u / det.sqrt();
    // v = c I + i s (n·σ): tr(v σ_k) = 2 i s n_k
    let cs = (v[(0, 0)] + v[(1, 1)]).re / 2.0;
    let sn = [
        (v[(0, 1)] + v[(1, 0)]).im / 2.0,
        (v[(0, 1)] - v[(1, 0)]).re / 2.0,
        (v[(0, 0)] - v[(1, 1)]).im / 2.0,
    ];
    let s = (sn[0] * sn[0] + sn[1] * sn[1] + sn[2] * sn[2]).sqrt();
    if s < 1e-300 {
        return if cs >= 0.0 {
            [0.0; 3]
        } else {
            [0.0, 0.0, std::f64::consts::PI]
        };
    }
    let a = s.atan2(cs);
    [a * sn[0] / s, a * sn[1] / s, a * sn[2] / s]
}

/// Diagonal of the generalized-CZ unitary.
pub fn gcz_diagonal(n: usize, betas: &[f64]) -> Vec<C64> {
    let pairs = qubit_pairs(n);
    (0..1usize << n)
        .map(|idx| {
            let phase: f64 = pairs
                .iter()
                .zip(betas)
                .filter(|((j, k), _)| bit(n, idx, *j) && bit(n, idx, *k))
                .map(|(_, b)| b)
                .sum();
            C64::from_polar(1.0, -std::f64::consts::PI * phase)
        })
        .collect()
}

/// Projector `|11⟩⟨11|_{jk}` on `n` qubits, as its diagonal.
pub fn pair_projector_diagonal(n: usize, j: usize, k: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|idx| if bit(n, idx, j) && bit(n, idx, k) { 1.0 } else { 0.0 })
        .collect()
}

/// Nonzero entries of Pauli word `word`: row `r` holds `phase(r)` in column `r ^ flip`.
fn pauli_word(n: usize, word: usize) -> (usize, impl Fn(usize) -> C64) {
    let digits: Vec<usize> = (0..n).map(|q| (word >> (2 * (n - 1 - q))) & 3).collect();
    let flip = digits.iter().enumerate().fold(0usize, |acc, (q, &d)| {
        if d == 1 || d == 2 {
            acc | 1 << (n - 1 - q)
        } else {
            acc
        }
    });
    let phase = move |row: usize| {
        digits.iter().enumerate().fold(ONE, |acc, (q, &d)| {
            let set = row >> (n - 1 - q) & 1 == 1;
            match (d, set) {
                (2, false) => acc * -I,
                (2, true) => acc * I,
                (3, true) => -acc,
                _ => acc,
            }
        })
    };
    (flip, phase)
}

pub fn pauli_word_matrix(n: usize, word: usize) -> CMat {
    let (flip, phase) = pauli_word(n, word);
    let mut m = CMat::zeros(1 << n, 1 << n);
    for r in 0..1usize << n {
        m[(r, r ^ flip)] = phase(r);
    }
    m
}

/// `Σ_w coefficients[w-1] P_w`.
pub fn pauli_generator(n: usize, coefficients: &[f64]) -> CMat {
    let mut h = CMat::zeros(1 << n, 1 << n);
    for (idx, &coef) in coefficients.iter().enumerate() {
        if coef == 0.0 {
            continue;
        }
        let (flip, phase) = pauli_word(n, idx + 1);
        for r in 0..1usize << n {
            h[(r, r ^ flip)] += phase(r) * coef;
        }
    }
    h
}

/// Real coefficients `tr(P_w H)/2ⁿ` of a Hermitian `H`, identity word dropped.
pub fn pauli_coefficients(n: usize, h: &CMat) -> Vec<f64> {
    let dim = 1usize << n;
    (1..dim * dim)
        .map(|word| {
            let (flip, phase) = pauli_word(n, word);
            let tr: C64 = (0..dim).map(|r| phase(r) * h[(r ^ flip, r)]).sum();
            tr.re / dim as f64
        })
        .collect()
}

impl FixedCzLayer {
    pub fn new(n: usize, connectivity: Connectivity) -> Self {
        let pairs = match connectivity {
            Connectivity::AllToAll => qubit_pairs(n),
            Connectivity::Linear => (0..n.saturating_sub(1)).map(|q| (q, q + 1)).collect(),
        };
        FixedCzLayer {
            pairs,
            connectivity,
        }
    }

    pub fn on_pairs(pairs: Vec<(usize, usize)>) -> Self {
        FixedCzLayer {
            pairs,
            connectivity: Connectivity::AllToAll,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        for &(j, k) in &self.pairs {
            for q in [j, k] {
                if q >= n {
                    return Err(Error::QubitOutOfRange { index: q, n });
                }
            }
            if j == k {
                return Err(Error::InvalidArgument(format!("CZ on a single qubit {j}")));
            }
            if self.connectivity == Connectivity::Linear && j.abs_diff(k) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "pair ({j}, {k}) violates linear connectivity"
                )));
            }
        }
        Ok(())
    }
}

impl ProductRotationLayer {
    pub fn identity(n: usize) -> Self {
        ProductRotationLayer {
            alphas: vec![[0.0; 3]; n],
        }
    }
}

impl GeneralizedCzLayer {
    pub fn identity(n: usize) -> Self {
        GeneralizedCzLayer {
            betas: vec![0.0; pair_count(n)],
        }
    }
}

impl GeneralUnitaryLayer {
    pub fn identity(n: usize) -> Self {
        GeneralUnitaryLayer {
            coefficients: vec![0.0; (1usize << (2 * n)) - 1],
        }
    }
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::SingleQubit(_) => "single_qubit",
            Layer::ProductRotation(_) => "product_rotation",
            Layer::GeneralizedCz(_) => "generalized_cz",
            Layer::FixedCz(_) => "fixed_cz",
            Layer::Hadamard => "hadamard",
            Layer::GeneralUnitary(_) => "general_unitary",
        }
    }

    /// Checks that the parameter shape fits `n` qubits.
    pub fn check_shape(&self, n: usize) -> Result<()> {
        let shape = |expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::ParameterShape {
                    layer: self.name(),
                    expected,
                    actual,
                })
            }
        };
        match self {
            Layer::SingleQubit(r) => {
                if r.target >= n {
                    return Err(Error::QubitOutOfRange { index: r.target, n });
                }
                Ok(())
            }
            Layer::ProductRotation(p) => shape(n, p.alphas.len()),
            Layer::GeneralizedCz(g) => shape(pair_count(n), g.betas.len()),
            Layer::FixedCz(f) => f.check(n),
            Layer::Hadamard => Ok(()),
            Layer::GeneralUnitary(g) => shape((1usize << (2 * n)) - 1, g.coefficients.len()),
        }?;
        if self.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("{} parameters", self.name())));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        match self {
            Layer::SingleQubit(_) => 3,
            Layer::ProductRotation(p) => 3 * p.alphas.len(),
            Layer::GeneralizedCz(g) => g.betas.len(),
            Layer::FixedCz(_) | Layer::Hadamard => 0,
            Layer::GeneralUnitary(g) => g.coefficients.len(),
        }
    }

    pub fn is_parametrized(&self) -> bool {
        self.num_params() > 0
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Layer::SingleQubit(r) => r.alpha.to_vec(),
            Layer::ProductRotation(p) => p.alphas.iter().flatten().copied().collect(),
            Layer::GeneralizedCz(g) => g.betas.clone(),
            Layer::FixedCz(_) | Layer::Hadamard => Vec::new(),
            Layer::GeneralUnitary(g) => g.coefficients.clone(),
        }
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::ParameterShape {
                layer: self.name(),
                expected: self.num_params(),
                actual: values.len(),
            });
        }
        match self {
            Layer::SingleQubit(r) => r.alpha.copy_from_slice(values),
            Layer::ProductRotation(p) => {
                for (alpha, chunk) in p.alphas.iter_mut().zip(values.chunks(3)) {
                    alpha.copy_from_slice(chunk);
                }
            }
            Layer::GeneralizedCz(g) => g.betas.copy_from_slice(values),
            Layer::FixedCz(_) | Layer::Hadamard => {}
            Layer::GeneralUnitary(g) => g.coefficients.copy_from_slice(values),
        }
        Ok(())
    }

    /// The layer's `2ⁿ × 2ⁿ` unitary.
    pub fn unitary(&self, n: usize) -> Result<CMat> {
        self.check_shape(n)?;
        Ok(match self {
            Layer::SingleQubit(r) => embed(&rotation_unitary(&r.alpha), &[r.target], n)?,
            Layer::ProductRotation(p) => {
                let factors: Vec<CMat> = p.alphas.iter().map(rotation_unitary).collect();
                kron_all(&factors)
            }
            Layer::GeneralizedCz(g) => {
                CMat::from_diagonal(&CVec::from_vec(gcz_diagonal(n, &g.betas)))
            }
            Layer::FixedCz(f) => {
                let diag = (0..1usize << n)
                    .map(|idx| {
                        let flips = f
                            .pairs
                            .iter()
                            .filter(|(j, k)| bit(n, idx, *j) && bit(n, idx, *k))
                            .count();
                        if flips % 2 == 0 {
                            ONE
                        } else {
                            -ONE
                        }
                    })
                    .collect();
                CMat::from_diagonal(&CVec::from_vec(diag))
            }
            Layer::Hadamard => {
                let h = hadamard();
                kron_all(std::iter::repeat_n(&h, n))
            }
            Layer::GeneralUnitary(g) => hermitian_exp(&pauli_generator(n, &g.coefficients), 1.0)?,
        })
    }
}

/// The layer's unitary on `n` qubits.
pub fn layer_unitary(layer: &Layer, n: usize) -> Result<CMat> {
    layer.unitary(n)
}

/// `U ρ U†` for the layer's unitary `U`.
pub fn apply(layer: &Layer, rho: &DensityMatrix) -> Result<DensityMatrix> {
    rho.conjugate(&layer.unitary(rho.n_qubits())?)
}

pub fn apply_state(layer: &Layer, psi: &PureState) -> Result<PureState> {
    psi.evolve(&layer.unitary(psi.n_qubits())?)
}

/// Diagonal unitary with `±1` entries, used for hand-built CZ checks.
pub fn cz_matrix() -> CMat {
    CMat::from_diagonal(&CVec::from_vec(vec![ONE, ONE, ONE, -ONE]))
}
