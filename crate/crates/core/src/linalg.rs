//! Dense complex linear algebra for multi-qubit operators.
//!
//! Qubit 0 is the most significant bit of a computational-basis index: on
//! `n` qubits, qubit `q` owns bit `n - 1 - q`. Every routine in the crate
//! follows this convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerances for accepting externally supplied states.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-10;

/// A seed for every randomized routine. Identical seeds give identical streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for sub-stream `index`; children are independent of how
    /// many siblings are drawn.
    pub fn derive(self, index: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Pauli matrix `σ_k`, with `σ_0` the identity.
pub fn pauli(k: usize) -> CMat {
    match k {
        0 => identity(2),
        1 => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

/// Kronecker product; `a` acts on the more significant qubits.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn commutator(a: &CMat, b: &CMat) -> Result<CMat> {
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

/// `u · m · u†`
pub fn conjugate(u: &CMat, m: &CMat) -> CMat {
    u * m * u.adjoint()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Largest entry of `|a - e^{iφ} b|` after aligning `b`'s global phase to `a`.
pub fn max_abs_diff_up_to_phase(a: &CMat, b: &CMat) -> f64 {
    let overlap: C64 = b.iter().zip(a.iter()).map(|(y, x)| y.conj() * x).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    max_abs_diff(a, &(b * phase))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// Unitarity defect `max |U†U - I|`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(())
}

/// Number of qubits for a `2^n`-dimensional space.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching eigenvector columns.
pub fn hermitian_eigen(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    check_square(h)?;
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOL.max(HERMITIAN_TOL * max_abs(h)) {
        return Err(Error::NotHermitian(defect));
    }
    let eig = hermitize(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(h.nrows(), h.ncols(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    Ok((values, vectors))
}

/// `exp(i · scale · H)` for Hermitian `H`, by spectral decomposition.
pub fn hermitian_exp(h: &CMat, scale: f64) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(h)?;
    let phases = CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::from_polar(1.0, scale * v)),
    );
    let mut scaled = vectors.clone();
    for (col, phase) in phases.iter().enumerate() {
        scaled.column_mut(col).scale_mut_complex(*phase);
    }
    Ok(scaled * vectors.adjoint())
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, z: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, z: C64) {
        for x in self.iter_mut() {
            *x *= z;
        }
    }
}

/// Hermitian `H` with `exp(iH) = U` and spectrum in `(-π, π]`, computed from
/// the complex Schur form (diagonal for normal matrices).
pub fn unitary_log(u: &CMat) -> Result<CMat> {
    check_square(u)?;
    let (q, t) = u.clone().schur().unpack();
    let dim = u.nrows();
    let mut h = CMat::zeros(dim, dim);
    for k in 0..dim {
        let angle = t[(k, k)].arg();
        let v = q.column(k);
        h += (&v * v.adjoint()) * c(angle, 0.0);
    }
    Ok(hermitize(&h))
}

/// Eigenvalue phases of a unitary, each in `(-π, π]`.
pub fn unitary_eigenphases(u: &CMat) -> Result<Vec<f64>> {
    check_square(u)?;
    let (_, t) = u.clone().schur().unpack();
    Ok((0..u.nrows()).map(|k| t[(k, k)].arg()).collect())
}

/// Square root of a PSD matrix; eigenvalues in `[-PSD_TOL, 0)` are clipped.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(m)?;
    let scale = max_abs(m).max(1.0);
    if let Some(&min) = values.first() {
        if min < -PSD_TOL * scale {
            return Err(Error::NotPsd(min));
        }
    }
    let mut scaled = vectors.clone();
    for (col, &v) in values.iter().enumerate() {
        scaled
            .column_mut(col)
            .scale_mut_complex(c(v.max(0.0).sqrt(), 0.0));
    }
    Ok(scaled * vectors.adjoint())
}

pub fn matrix_sqrt_psd(rho: &DensityMatrix) -> Result<CMat> {
    psd_sqrt(rho.matrix())
}

fn bit_offset(n: usize, qubit: usize) -> usize {
    1 << (n - 1 - qubit)
}

/// Basis offsets for each assignment of `qubits` (first listed is most
/// significant) and for each assignment of the complementary qubits.
fn subsystem_offsets(n: usize, qubits: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let rest: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let offsets = |set: &[usize]| -> Vec<usize> {
        (0..1usize << set.len())
            .map(|a| {
                set.iter().enumerate().fold(0, |acc, (pos, &q)| {
                    if a >> (set.len() - 1 - pos) & 1 == 1 {
                        acc | bit_offset(n, q)
                    } else {
                        acc
                    }
                })
            })
            .collect()
    };
    (offsets(qubits), offsets(&rest))
}

fn check_qubit_set(n: usize, qubits: &[usize]) -> Result<()> {
    for (k, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        if qubits[..k].contains(&q) {
            return Err(Error::InvalidArgument(format!("duplicate qubit {q}")));
        }
    }
    Ok(())
}

/// Partial trace of an arbitrary operator on `n` qubits, keeping `keep` in
/// the listed order.
pub fn partial_trace_op(m: &CMat, n: usize, keep: &[usize]) -> Result<CMat> {
    if m.nrows() != 1 << n || m.ncols() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            actual: m.nrows(),
        });
    }
    check_qubit_set(n, keep)?;
    let (kept, traced) = subsystem_offsets(n, keep);
    let dim = kept.len();
    Ok(CMat::from_fn(dim, dim, |a, b| {
        traced
            .iter()
            .map(|&t| m[(kept[a] | t, kept[b] | t)])
            .sum()
    }))
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let reduced = partial_trace_op(rho.matrix(), rho.n_qubits(), keep)?;
    Ok(DensityMatrix::from_raw(keep.len(), reduced))
}

/// Embed an operator on the ordered `targets` into `n` qubits, identity elsewhere.
pub fn embed(op: &CMat, targets: &[usize], n: usize) -> Result<CMat> {
    check_qubit_set(n, targets)?;
    if op.nrows() != 1 << targets.len() || op.ncols() != op.nrows() {
        return Err(Error::DimensionMismatch {
            expected: 1 << targets.len(),
            actual: op.nrows(),
        });
    }
    let (kept, rest) = subsystem_offsets(n, targets);
    let mut out = CMat::zeros(1 << n, 1 << n);
    for &t in &rest {
        for (a, &ka) in kept.iter().enumerate() {
            for (b, &kb) in kept.iter().enumerate() {
                out[(ka | t, kb | t)] = op[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Block `|i⟩⟨i|_measured ⊗ op_survivors` on `n` qubits.
pub fn embed_outcome_block(
    op: &CMat,
    measured: &[usize],
    outcome: usize,
    n: usize,
) -> Result<CMat> {
    check_qubit_set(n, measured)?;
    let (meas, surv) = subsystem_offsets(n, measured);
    if op.nrows() != surv.len() {
        return Err(Error::DimensionMismatch {
            expected: surv.len(),
            actual: op.nrows(),
        });
    }
    let base = meas[outcome];
    let mut out = CMat::zeros(1 << n, 1 << n);
    for (a, &sa) in surv.iter().enumerate() {
        for (b, &sb) in surv.iter().enumerate() {
            out[(base | sa, base | sb)] = op[(a, b)];
        }
    }
    Ok(out)
}

/// Unnormalized post-measurement block `tr_A(ρ (|i⟩⟨i|_A ⊗ I))` on the
/// surviving qubits.
pub fn outcome_block(m: &CMat, measured: &[usize], outcome: usize, n: usize) -> Result<CMat> {
    check_qubit_set(n, measured)?;
    let (meas, surv) = subsystem_offsets(n, measured);
    let base = meas[outcome];
    Ok(CMat::from_fn(surv.len(), surv.len(), |a, b| {
        m[(base | surv[a], base | surv[b])]
    }))
}

/// A normalized pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amps: CVec,
}

impl PureState {
    pub fn new(amps: CVec) -> Result<Self> {
        let n = qubits_for_dim(amps.len())?;
        let norm2 = amps.norm_squared();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitude".into()));
        }
        Ok(PureState { n, amps })
    }

    /// Normalizes `amps` before validating.
    pub fn normalized(amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonFinite("zero or non-finite state".into()));
        }
        Self::new(amps.unscale(norm))
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = CVec::zeros(1 << n);
        amps[index] = ONE;
        PureState { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn kron(&self, other: &PureState) -> PureState {
        PureState {
            n: self.n + other.n,
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_raw(self.n, &self.amps * self.amps.adjoint())
    }

    /// `U|ψ⟩`; `u` must be unitary of matching dimension.
    pub fn evolve(&self, u: &CMat) -> Result<PureState> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.ncols(),
            });
        }
        Ok(PureState {
            n: self.n,
            amps: u * &self.amps,
        })
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, rho: &CMat) -> f64 {
        self.amps.dotc(&(rho * &self.amps)).re
    }
}

/// A Hermitian, positive semi-definite, unit-trace operator on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: CMat) -> Result<Self> {
        check_square(&mat)?;
        let n = qubits_for_dim(mat.nrows())?;
        let rho = DensityMatrix { n, mat };
        rho.validate(HERMITIAN_TOL, TRACE_TOL, PSD_TOL)?;
        Ok(rho)
    }

    pub(crate) fn from_raw(n: usize, mat: CMat) -> Self {
        debug_assert_eq!(mat.nrows(), 1 << n);
        DensityMatrix { n, mat }
    }

    pub fn validate(&self, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<()> {
        let defect = hermiticity_defect(&self.mat);
        if defect > herm_tol {
            return Err(Error::NotHermitian(defect));
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidArgument(format!("trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue();
        if min < -psd_tol {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }

    pub fn basis(n: usize, index: usize) -> Self {
        PureState::basis(n, index).projector()
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1 << n;
        DensityMatrix {
            n,
            mat: identity(dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n: self.n + other.n,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = hermitize(&self.mat)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// `U ρ U†`
    pub fn conjugate(&self, u: &CMat) -> Result<DensityMatrix> {
        if u.ncols() != self.dim() || u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.nrows(),
            });
        }
        Ok(DensityMatrix {
            n: self.n,
            mat: conjugate(u, &self.mat),
        })
    }
}

pub fn haar_state_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PureState {
    let dim = 1usize << n;
    let amps = CVec::from_fn(dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    PureState::normalized(amps).expect("gaussian vector is almost surely nonzero")
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn haar_state(n: usize, seed: RngSeed) -> PureState {
    haar_state_rng(n, &mut seed.rng())
}

pub fn haar_unitary_rng<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let ginibre = CMat::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = ginibre.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(k).scale_mut_complex(phase);
    }
    q
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases
/// of `diag(R)` folded back into `Q`.
pub fn haar_unitary(dim: usize, seed: RngSeed) -> CMat {
    haar_unitary_rng(dim, &mut seed.rng())
}

const PURE_TOL: f64 = 1e-10;

fn dominant_vector(rho: &DensityMatrix) -> CVec {
    let (_, vectors) = hermitian_eigen(rho.matrix()).expect("density matrices are Hermitian");
    vectors.column(rho.dim() - 1).into_owned()
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    // Rank-one states: the square roots of round-off eigenvalues would
    // otherwise leak O(1e-8) into the trace.
    if sigma.purity() > 1.0 - PURE_TOL {
        let v = dominant_vector(sigma);
        return Ok(v.dotc(&(rho.matrix() * &v)).re.clamp(0.0, 1.0));
    }
    if rho.purity() > 1.0 - PURE_TOL {
        let v = dominant_vector(rho);
        return Ok(v.dotc(&(sigma.matrix() * &v)).re.clamp(0.0, 1.0));
    }
    let root = psd_sqrt(rho.matrix())?;
    let inner = hermitize(&(&root * sigma.matrix() * &root));
    let (values, _) = hermitian_eigen(&inner)?;
    let tr: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_density(n: usize, seed: u64) -> DensityMatrix {
        let mut rng = RngSeed(seed).rng();
        let dim = 1 << n;
        let g = CMat::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    }

    fn random_hermitian(dim: usize, seed: u64) -> CMat {
        let mut rng = RngSeed(seed).rng();
        let g = CMat::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        hermitize(&g)
    }

    #[test]
    fn kron_identity_and_bit_flips() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let xx = kron(&pauli(1), &pauli(1));
        let out = PureState::basis(2, 0b00).evolve(&xx).unwrap();
        assert_eq!(out, PureState::basis(2, 0b11));
    }

    #[test]
    fn kron_z_on_msb() {
        // Hand multiplication: (Z ⊗ I)|10⟩ = -|10⟩ since qubit 0 is set.
        let zi = kron(&pauli(3), &identity(2));
        let ket = CVec::from_vec(vec![ZERO, ZERO, ONE, ZERO]);
        let out = &zi * &ket;
        assert_eq!(out, CVec::from_vec(vec![ZERO, ZERO, -ONE, ZERO]));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let rho = DensityMatrix::basis(2, 0);
        let red = partial_trace(&rho, &[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), DensityMatrix::basis(1, 0).matrix()) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(CVec::from_vec(vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]))
            .unwrap()
            .projector();
        let red = partial_trace(&bell, &[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), DensityMatrix::maximally_mixed(1).matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let rho = random_density(2, 11);
        let red = partial_trace(&rho, &[0]).unwrap();
        // ρ_A[a, b] = Σ_t ρ[(a t), (b t)] with a the high bit.
        for a in 0..2 {
            for b in 0..2 {
                let expected = rho.matrix()[(2 * a, 2 * b)] + rho.matrix()[(2 * a + 1, 2 * b + 1)];
                assert!((red.matrix()[(a, b)] - expected).norm() < 1e-15);
            }
        }
        let red1 = partial_trace(&rho, &[1]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expected = rho.matrix()[(a, b)] + rho.matrix()[(2 + a, 2 + b)];
                assert!((red1.matrix()[(a, b)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_errors_and_full_keep() {
        let rho = random_density(3, 5);
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::EmptySelection)));
        assert!(matches!(
            partial_trace(&rho, &[3]),
            Err(Error::QubitOutOfRange { index: 3, n: 3 })
        ));
        let full = partial_trace(&rho, &[0, 1, 2]).unwrap();
        assert!(max_abs_diff(full.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_respects_keep_order() {
        let a = haar_state(1, RngSeed(1)).projector();
        let b = haar_state(1, RngSeed(2)).projector();
        let ab = a.kron(&b);
        let swapped = partial_trace(&ab, &[1, 0]).unwrap();
        assert!(max_abs_diff(swapped.matrix(), b.kron(&a).matrix()) < 1e-14);
    }

    #[test]
    fn hermitian_exp_cases() {
        let zero = CMat::zeros(4, 4);
        assert!(max_abs_diff(&hermitian_exp(&zero, 1.0).unwrap(), &identity(4)) < 1e-15);

        // exp(iπX) = cos π I + i sin π X = -I
        let u = hermitian_exp(&pauli(1), std::f64::consts::PI).unwrap();
        assert!(max_abs_diff(&u, &(-identity(2))) < 1e-12);

        let mut d = CMat::zeros(4, 4);
        d[(3, 3)] = c(-std::f64::consts::PI, 0.0);
        let u = hermitian_exp(&d, 1.0).unwrap();
        let cz = CMat::from_diagonal(&CVec::from_vec(vec![ONE, ONE, ONE, -ONE]));
        assert!(max_abs_diff(&u, &cz) < 1e-12);
    }

    #[test]
    fn hermitian_exp_rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(hermitian_exp(&m, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn hermitian_exp_unitary_at_256() {
        let h = random_hermitian(256, 3);
        let u = hermitian_exp(&h, 0.7).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn unitary_log_inverts_exp() {
        for seed in 0..5 {
            let u = haar_unitary(8, RngSeed(seed));
            let h = unitary_log(&u).unwrap();
            assert!(hermiticity_defect(&h) < 1e-12);
            let back = hermitian_exp(&h, 1.0).unwrap();
            assert!(max_abs_diff(&back, &u) < 1e-10);
        }
    }

    #[test]
    fn sqrt_cases() {
        let mixed = DensityMatrix::maximally_mixed(1);
        let root = matrix_sqrt_psd(&mixed).unwrap();
        assert!(max_abs_diff(&root, &(identity(2) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0))) < 1e-15);
        let zero = DensityMatrix::basis(1, 0);
        assert!(max_abs_diff(&matrix_sqrt_psd(&zero).unwrap(), zero.matrix()) < 1e-15);
        for seed in 0..5 {
            let rho = random_density(3, seed);
            let root = matrix_sqrt_psd(&rho).unwrap();
            assert!(max_abs_diff(&(&root * &root), rho.matrix()) < 1e-8);
        }
    }

    #[test]
    fn sqrt_rejects_negative() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn haar_state_normalized_and_deterministic() {
        let a = haar_state(3, RngSeed(42));
        assert!((a.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
        assert_eq!(a, haar_state(3, RngSeed(42)));
        assert_ne!(a, haar_state(3, RngSeed(43)));
    }

    #[test]
    fn haar_state_overlap_moment() {
        // E|⟨ψ|φ⟩|² = 1/d for Haar states, variance (d-1)/(d²(d+1)).
        let samples = 10_000;
        let seed = RngSeed(7);
        let mut rng = seed.rng();
        let vals: Vec<f64> = (0..samples)
            .map(|_| {
                let a = haar_state_rng(2, &mut rng);
                let b = haar_state_rng(2, &mut rng);
                a.inner(&b).norm_sqr()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / samples as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        assert!((mean - 0.25).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn haar_unitary_is_unitary() {
        for dim in [2, 4, 8] {
            let u = haar_unitary(dim, RngSeed(dim as u64));
            assert!(unitarity_defect(&u) < 1e-10);
            for k in 0..dim {
                assert!((u.column(k).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_eigenphases_uniform_ks() {
        let mut rng = RngSeed(2024).rng();
        let mut phases: Vec<f64> = (0..1000)
            .flat_map(|_| unitary_eigenphases(&haar_unitary_rng(4, &mut rng)).unwrap())
            .map(|p| (p + std::f64::consts::PI) / (2.0 * std::f64::consts::PI))
            .collect();
        phases.sort_by(f64::total_cmp);
        let count = phases.len() as f64;
        let d = phases
            .iter()
            .enumerate()
            .map(|(k, &x)| ((k + 1) as f64 / count - x).max(x - k as f64 / count))
            .fold(0.0, f64::max);
        // Asymptotic Kolmogorov critical value at α = 0.01.
        assert!(d < 1.6276 / count.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn fidelity_cases() {
        let zero = DensityMatrix::basis(1, 0);
        let one = DensityMatrix::basis(1, 1);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!((fidelity(&mixed, &zero).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity(&mixed, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn fidelity_pure_matches_expectation_and_symmetric() {
        for seed in 0..10 {
            let rho = random_density(2, seed);
            let phi = haar_state(2, RngSeed(100 + seed));
            let f = fidelity(&rho, &phi.projector()).unwrap();
            assert!((f - phi.expectation(rho.matrix())).abs() < 1e-9);
            let sigma = random_density(2, 50 + seed);
            let ab = fidelity(&rho, &sigma).unwrap();
            let ba = fidelity(&sigma, &rho).unwrap();
            assert!((ab - ba).abs() < 1e-9);
        }
    }

    #[test]
    fn commutator_cases() {
        let a = random_hermitian(4, 1);
        assert!(max_abs(&commutator(&a, &a).unwrap()) < 1e-15);
        let xy = commutator(&pauli(1), &pauli(2)).unwrap();
        assert!(max_abs_diff(&xy, &(pauli(3) * c(0.0, 2.0))) < 1e-15);
        assert!(commutator(&identity(2), &identity(4)).is_err());
    }

    #[test]
    fn cyclic_trace_identity() {
        for seed in 0..10 {
            let a = random_hermitian(4, 3 * seed);
            let b = random_hermitian(4, 3 * seed + 1);
            let cc = random_hermitian(4, 3 * seed + 2);
            let lhs = (&a * commutator(&b, &cc).unwrap()).trace();
            let rhs = (commutator(&cc, &a).unwrap() * &b).trace();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn embed_and_outcome_block_roundtrip() {
        let x = pauli(1);
        let e = embed(&x, &[1], 3).unwrap();
        let expected = kron_all([&identity(2), &pauli(1), &identity(2)]);
        assert!(max_abs_diff(&e, &expected) < 1e-15);

        let op = random_hermitian(2, 9);
        let blk = embed_outcome_block(&op, &[0, 1], 2, 3).unwrap();
        let back = outcome_block(&blk, &[0, 1], 2, 3).unwrap();
        assert!(max_abs_diff(&back, &op) < 1e-15);
        assert!(max_abs(&outcome_block(&blk, &[0, 1], 1, 3).unwrap()) < 1e-15);
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let s = RngSeed(1);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(5), RngSeed(1).derive(5));
    }
}
