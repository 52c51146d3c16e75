//! Two-qubit density matrices and the entanglement and quality measures
//! reported for every reconstructed state: tangle, purity and fidelity.
//!
//! The basis order is `{HH, HV, VH, VV}` with the signal photon first.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Matrix4c = Matrix4<Complex64>;
pub type Matrix2c = Matrix2<Complex64>;

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue tolerated (and clipped to zero) as numerical slack.
pub const PSD_TOLERANCE: f64 = 1e-10;
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
/// Density-matrix eigenvalues below this are treated as zero by [`concurrence`].
pub const EIGEN_FLOOR: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A two-qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub [Complex64; 4]);

impl StateVector {
    pub fn new(amps: [Complex64; 4]) -> Self {
        Self(amps)
    }

    pub fn hh() -> Self {
        Self([ONE, ZERO, ZERO, ZERO])
    }

    pub fn vv() -> Self {
        Self([ZERO, ZERO, ZERO, ONE])
    }

    /// `(|HH⟩ + ν|VV⟩)/√2` for a unit-modulus `ν`.
    pub fn phi(nu: Complex64) -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self([s, ZERO, ZERO, s * nu])
    }

    pub fn phi_plus() -> Self {
        Self::phi(ONE)
    }

    pub fn phi_minus() -> Self {
        Self::phi(-ONE)
    }

    pub fn phi_plus_i() -> Self {
        Self::phi(Complex64::new(0.0, 1.0))
    }

    pub fn phi_minus_i() -> Self {
        Self::phi(Complex64::new(0.0, -1.0))
    }

    pub fn psi_plus() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self([ZERO, s, s, ZERO])
    }

    pub fn psi_minus() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self([ZERO, s, -s, ZERO])
    }

    /// Product state `a ⊗ b` of two single-qubit vectors.
    pub fn product(a: [Complex64; 2], b: [Complex64; 2]) -> Self {
        Self([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        (n > 0.0).then(|| Self(self.0.map(|a| a / n)))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_vector(&self) -> Vector4<Complex64> {
        Vector4::from_column_slice(&self.0)
    }

    /// `|ψ⟩⟨ψ|` (not normalized).
    pub fn outer(&self) -> Matrix4c {
        let v = self.to_vector();
        v * v.adjoint()
    }
}

/// A validated two-qubit density matrix: Hermitian, unit trace and positive
/// semidefinite within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4c,
}

impl TwoQubitState {
    pub fn from_matrix(rho: Matrix4c) -> Result<Self> {
        let herm_err = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > HERMITIAN_TOLERANCE {
            return Err(Error::Contract(format!("density matrix not Hermitian (max deviation {herm_err:.3e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOLERANCE || tr.im.abs() > TRACE_TOLERANCE {
            return Err(Error::Contract(format!("density matrix trace is {tr}, expected 1")));
        }
        let min_eig = hermitian_eigenvalues(&rho).iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::Contract(format!("density matrix has negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { rho })
    }

    /// Hermitizes and trace-normalizes `m`, then validates. Use for matrices
    /// that are physical up to rounding.
    pub fn from_matrix_normalized(m: Matrix4c) -> Result<Self> {
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = h.trace().re;
        if !(tr > 0.0) {
            return Err(Error::Contract(format!("matrix trace {tr} is not positive")));
        }
        Self::from_matrix(h / Complex64::new(tr, 0.0))
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        let psi = psi
            .normalized()
            .ok_or_else(|| Error::Contract("zero state vector".to_string()))?;
        Self::from_matrix_normalized(psi.outer())
    }

    pub fn maximally_mixed() -> Self {
        Self { rho: Matrix4c::identity() * Complex64::new(0.25, 0.0) }
    }

    pub fn rho(&self) -> &Matrix4c {
        &self.rho
    }

    pub fn into_matrix(self) -> Matrix4c {
        self.rho
    }

    /// Eigenvalues in ascending order, negative slack clipped to zero.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut e = hermitian_eigenvalues(&self.rho);
        e.sort_by(f64::total_cmp);
        e.map(|x| x.max(0.0))
    }

    /// `Tr(ρ Π)` for a Hermitian operator `Π`.
    pub fn expectation(&self, op: &Matrix4c) -> f64 {
        (self.rho * op).trace().re
    }

    /// `½ Tr|ρ - σ|`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        0.5 * hermitian_eigenvalues(&(self.rho - other.rho)).iter().map(|x| x.abs()).sum::<f64>()
    }

    /// `(U_A ⊗ U_B) ρ (U_A ⊗ U_B)†`.
    pub fn local_unitary(&self, ua: &Matrix2c, ub: &Matrix2c) -> Result<Self> {
        let u = ua.kronecker(ub);
        Self::from_matrix_normalized(u * self.rho * u.adjoint())
    }
}

impl Serialize for TwoQubitState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            basis: [&'a str; 4],
            rho: Vec<[f64; 2]>,
        }
        let mut rho = Vec::with_capacity(16);
        for r in 0..4 {
            for c in 0..4 {
                let z = self.rho[(r, c)];
                rho.push([z.re, z.im]);
            }
        }
        Wire { basis: BASIS_LABELS, rho }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TwoQubitState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            basis: Vec<String>,
            rho: Vec<[f64; 2]>,
        }
        let w = Wire::deserialize(d)?;
        if w.basis != BASIS_LABELS {
            return Err(D::Error::custom(format!("unexpected basis {:?}", w.basis)));
        }
        if w.rho.len() != 16 {
            return Err(D::Error::custom(format!("expected 16 entries, got {}", w.rho.len())));
        }
        let m = Matrix4c::from_fn(|r, c| {
            let [re, im] = w.rho[4 * r + c];
            Complex64::new(re, im)
        });
        TwoQubitState::from_matrix(m).map_err(D::Error::custom)
    }
}

pub(crate) fn hermitian_eigenvalues(m: &Matrix4c) -> [f64; 4] {
    let e = SymmetricEigen::new(*m).eigenvalues;
    [e[0], e[1], e[2], e[3]]
}

/// Square root of a positive semidefinite Hermitian matrix; eigenvalues below
/// [`EIGEN_FLOOR`] are treated as rounding noise and dropped.
pub(crate) fn psd_sqrt(m: &Matrix4c) -> Matrix4c {
    let eig = SymmetricEigen::new(*m);
    let vecs = eig.eigenvectors;
    let roots = eig.eigenvalues.map(|x| Complex64::new(if x < EIGEN_FLOOR { 0.0 } else { x.sqrt() }, 0.0));
    vecs * Matrix4c::from_diagonal(&roots) * vecs.adjoint()
}

/// `ρ = Σ w_k ρ_k`. Weights must be non-negative and sum to one.
pub fn mix(states: &[TwoQubitState], weights: &[f64]) -> Result<TwoQubitState> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::Contract(format!(
            "mix needs matching non-empty lists, got {} states and {} weights",
            states.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Contract(format!("mixture weight {w} is negative")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::Contract(format!("mixture weights sum to {sum}, expected 1")));
    }
    let rho = states
        .iter()
        .zip(weights)
        .fold(Matrix4c::zeros(), |acc, (s, w)| acc + s.rho * Complex64::new(*w, 0.0));
    TwoQubitState::from_matrix_normalized(rho)
}

fn spin_flip() -> Matrix4c {
    let mut m = Matrix4c::zeros();
    m[(0, 3)] = -ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 0)] = -ONE;
    m
}

/// Wootters concurrence.
///
/// With `ρ = W W†`, `W = [√p_i ψ_i]`, the `λ_i` (square roots of the
/// eigenvalues of `ρ ρ̃`, `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`) are the singular values
/// of `Wᵀ (σ_y⊗σ_y) W`. Eigenvalues below [`EIGEN_FLOOR`] are rounding noise
/// and are dropped; their square roots would otherwise leak ~1e-8 into `C`.
pub fn concurrence(state: &TwoQubitState) -> f64 {
    let eig = SymmetricEigen::new(state.rho);
    let mut w = eig.eigenvectors;
    for (i, &p) in eig.eigenvalues.iter().enumerate() {
        let scale = if p > EIGEN_FLOOR { p.sqrt() } else { 0.0 };
        w.column_mut(i).scale_mut(scale);
    }
    let tau = w.transpose() * spin_flip() * w;
    let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Tangle, the squared concurrence.
pub fn tangle(state: &TwoQubitState) -> f64 {
    concurrence(state).powi(2)
}

/// `Tr(ρ²)`.
pub fn purity(state: &TwoQubitState) -> f64 {
    (state.rho * state.rho).trace().re
}

/// Jozsa fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(state: &TwoQubitState, target: &TwoQubitState) -> f64 {
    // square roots of the near-zero eigenvalues of a pure state amplify rounding
    for (pure, other) in [(target, state), (state, target)] {
        if purity(pure) > 1.0 - 1e-12 {
            let eig = SymmetricEigen::new(pure.rho);
            let top = eig.eigenvalues.imax();
            let v = eig.eigenvectors.column(top).into_owned();
            return (v.adjoint() * other.rho * v)[(0, 0)].re.clamp(0.0, 1.0);
        }
    }
    // Tr √(√ρ σ √ρ) is the sum of singular values of √ρ √σ, which avoids
    // square roots of the product's near-zero eigenvalues
    let product = psd_sqrt(&state.rho) * psd_sqrt(&target.rho);
    let tr: f64 = product.singular_values().iter().sum();
    (tr * tr).min(1.0)
}

/// Reference state by name: `phi+`, `phi-`, `phi+i`, `phi-i`, `psi+`,
/// `psi-`, `hh`, `vv` or `mixed` (case-insensitive).
pub fn named_state(name: &str) -> Result<TwoQubitState> {
    let psi = match name.trim().to_ascii_lowercase().as_str() {
        "phi+" => StateVector::phi_plus(),
        "phi-" => StateVector::phi_minus(),
        "phi+i" => StateVector::phi_plus_i(),
        "phi-i" => StateVector::phi_minus_i(),
        "psi+" => StateVector::psi_plus(),
        "psi-" => StateVector::psi_minus(),
        "hh" => StateVector::hh(),
        "vv" => StateVector::vv(),
        "mixed" => return Ok(TwoQubitState::maximally_mixed()),
        other => return Err(Error::Parse(format!("unknown state name '{other}'"))),
    };
    TwoQubitState::from_pure(&psi)
}

/// `⟨ψ|ρ|ψ⟩` for a normalized pure target.
pub fn fidelity_pure(state: &TwoQubitState, target: &StateVector) -> f64 {
    let v = target.to_vector();
    (v.adjoint() * state.rho * v)[(0, 0)].re
}

/// Random states and unitaries for tests, demos and Monte-Carlo studies.
pub mod random {
    use super::*;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Haar-random pure state.
    pub fn pure_state<R: Rng + ?Sized>(rng: &mut R) -> StateVector {
        let v = StateVector([gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)]);
        v.normalized().expect("gaussian vector is non-zero with probability one")
    }

    /// Random density matrix of the given rank (1..=4) from the induced
    /// Hilbert–Schmidt measure.
    pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> TwoQubitState {
        let rank = rank.clamp(1, 4);
        let mut m = Matrix4c::zeros();
        for _ in 0..rank {
            let v = Vector4::from_fn(|_, _| gaussian(rng));
            m += v * v.adjoint();
        }
        TwoQubitState::from_matrix_normalized(m).expect("Gram matrix is PSD")
    }

    /// Haar-random single-qubit unitary.
    pub fn unitary2<R: Rng + ?Sized>(rng: &mut R) -> Matrix2c {
        let a = gaussian(rng);
        let b = gaussian(rng);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        Matrix2c::new(a, -b.conj() * phase, b, a.conj() * phase)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pure(v: StateVector) -> TwoQubitState {
        TwoQubitState::from_pure(&v).unwrap()
    }

    fn three_mode_input() -> TwoQubitState {
        mix(
            &[pure(StateVector::phi_minus_i()), pure(StateVector::phi_plus()), pure(StateVector::phi_plus_i())],
            &[0.25, 0.5, 0.25],
        )
        .unwrap()
    }

    #[test]
    fn singleton_mix_is_identity() {
        let p = pure(StateVector::phi_plus());
        assert_eq!(mix(std::slice::from_ref(&p), &[1.0]).unwrap(), p);
    }

    #[test]
    fn three_mode_mixture_is_x_shaped() {
        let rho = three_mode_input();
        let m = rho.rho();
        assert_relative_eq!(m[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(m[(3, 3)].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(m[(0, 3)].re, 0.25, epsilon = 1e-15);
        assert!(m[(0, 3)].im.abs() < 1e-15);
        assert!(m[(1, 1)].norm() < 1e-15 && m[(2, 2)].norm() < 1e-15);
        assert_relative_eq!(tangle(&rho), 0.25, epsilon = 1e-12);
        assert_relative_eq!(purity(&rho), 0.625, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_mixture_is_diagonal() {
        let rho = mix(&[pure(StateVector::hh()), pure(StateVector::vv())], &[0.5, 0.5]).unwrap();
        let want = Matrix4c::from_diagonal(&Vector4::new(0.5, 0.0, 0.0, 0.5).map(|x| Complex64::new(x, 0.0)));
        assert!((rho.rho() - want).norm() < 1e-15);
        assert_relative_eq!(fidelity_pure(&rho, &StateVector::phi_plus()), 0.5, epsilon = 1e-15);
        assert_relative_eq!(fidelity(&rho, &pure(StateVector::phi_plus())), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let p = pure(StateVector::hh());
        assert!(matches!(mix(&[p.clone(), p.clone()], &[0.5, 0.6]), Err(Error::Contract(_))));
        assert!(matches!(mix(&[p.clone(), p.clone()], &[1.5, -0.5]), Err(Error::Contract(_))));
        assert!(mix(&[p], &[]).is_err());
    }

    #[test]
    fn tangle_of_reference_states() {
        assert_relative_eq!(tangle(&pure(StateVector::phi_plus())), 1.0, epsilon = 1e-10);
        assert_relative_eq!(tangle(&pure(StateVector::psi_minus())), 1.0, epsilon = 1e-10);
        assert!(tangle(&pure(StateVector::hh())) < 1e-12);
        let six = mix(
            &[pure(StateVector::phi_minus_i()), pure(StateVector::vv()), pure(StateVector::phi_plus_i())],
            &[0.25, 0.5, 0.25],
        )
        .unwrap();
        assert!(tangle(&six) < 1e-12);
        assert_relative_eq!(purity(&six), 0.625, epsilon = 1e-12);
    }

    #[test]
    fn purity_bounds() {
        assert_relative_eq!(purity(&pure(StateVector::psi_plus())), 1.0, epsilon = 1e-12);
        assert_relative_eq!(purity(&TwoQubitState::maximally_mixed()), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_reference_values() {
        let p = pure(StateVector::phi_plus_i());
        assert_relative_eq!(fidelity(&p, &p), 1.0, epsilon = 1e-7);
        let mm = TwoQubitState::maximally_mixed();
        assert_relative_eq!(fidelity(&mm, &p), 0.25, epsilon = 1e-9);
        assert_relative_eq!(fidelity_pure(&mm, &StateVector::hh()), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let mut m = Matrix4c::identity() * Complex64::new(0.25, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(TwoQubitState::from_matrix(m).is_err());
        let m = Matrix4c::identity() * Complex64::new(0.3, 0.0);
        assert!(TwoQubitState::from_matrix(m).is_err());
        let m = Matrix4c::from_diagonal(&Vector4::new(1.2, -0.2, 0.0, 0.0).map(|x| Complex64::new(x, 0.0)));
        assert!(TwoQubitState::from_matrix(m).is_err());
    }

    #[test]
    fn named_states() {
        assert!((tangle(&named_state("PHI+").unwrap()) - 1.0).abs() < 1e-10);
        assert!((purity(&named_state("mixed").unwrap()) - 0.25).abs() < 1e-12);
        assert!(matches!(named_state("ghz"), Err(Error::Parse(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = three_mode_input();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"basis\":[\"HH\",\"HV\",\"VH\",\"VV\"]"));
        let back: TwoQubitState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
