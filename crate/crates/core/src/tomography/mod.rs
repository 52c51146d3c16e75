//! Two-photon polarization tomography with the overcomplete set of 36
//! product projectors built from `{H, V, +, -, +i, -i}` on each photon.
//!
//! Counts are simulated with Poisson noise, inverted linearly, refined by
//! maximum likelihood and given Monte-Carlo error bars.

mod io;
mod mle;
mod montecarlo;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmetrics::{hermitian_eigenvalues, Matrix4c, StateVector, TwoQubitState};

pub use io::{read_dataset_csv, write_dataset_csv};
pub use mle::{
    mle_reconstruct, mle_reconstruct_with, objective, objective_gradient, params_from_matrix, state_log_likelihood, t_matrix,
    ConvergenceReason, LikelihoodModel, MleDiagnostics, MleOptions, MleResult, N_PARAMS,
};
pub use montecarlo::{monte_carlo_uncertainty, MetricSummary, MonteCarloSummary, MIN_SAMPLES};

pub const N_SETTINGS: usize = 36;

/// Single-photon analyser state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "H")]
    H,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+i")]
    PlusI,
    #[serde(rename = "-i")]
    MinusI,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [Self::H, Self::V, Self::Plus, Self::Minus, Self::PlusI, Self::MinusI];

    pub fn label(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::V => "V",
            Self::Plus => "+",
            Self::Minus => "-",
            Self::PlusI => "+i",
            Self::MinusI => "-i",
        }
    }

    pub fn vector(self) -> [Complex64; 2] {
        let r = |x: f64| Complex64::new(x, 0.0);
        let s = FRAC_1_SQRT_2;
        match self {
            Self::H => [r(1.0), r(0.0)],
            Self::V => [r(0.0), r(1.0)],
            Self::Plus => [r(s), r(s)],
            Self::Minus => [r(s), r(-s)],
            Self::PlusI => [r(s), Complex64::new(0.0, s)],
            Self::MinusI => [r(s), Complex64::new(0.0, -s)],
        }
    }

    /// Index of the complete measurement basis this state belongs to
    /// (0: H/V, 1: ±, 2: ±i).
    pub fn basis(self) -> usize {
        match self {
            Self::H | Self::V => 0,
            Self::Plus | Self::Minus => 1,
            Self::PlusI | Self::MinusI => 2,
        }
    }

    /// Expectation values `(1, ⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of the analyser state.
    pub fn stokes(self) -> [f64; 4] {
        match self {
            Self::H => [1.0, 0.0, 0.0, 1.0],
            Self::V => [1.0, 0.0, 0.0, -1.0],
            Self::Plus => [1.0, 1.0, 0.0, 0.0],
            Self::Minus => [1.0, -1.0, 0.0, 0.0],
            Self::PlusI => [1.0, 0.0, 1.0, 0.0],
            Self::MinusI => [1.0, 0.0, -1.0, 0.0],
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown analyser setting '{s}'")))
    }
}

/// One of the 36 two-photon projective settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    pub a: Polarization,
    pub b: Polarization,
    /// `|a⟩ ⊗ |b⟩`.
    pub vector: StateVector,
}

impl Projector {
    pub fn matrix(&self) -> Matrix4c {
        self.vector.outer()
    }

    /// Index of the 4-setting complete-basis group (0..9).
    pub fn group(&self) -> usize {
        3 * self.a.basis() + self.b.basis()
    }
}

/// The full Cartesian product `{H,V,+,-,+i,-i}²`, signal setting outermost.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    projectors: Vec<Projector>,
}

impl ProjectorSet {
    pub fn standard() -> &'static ProjectorSet {
        static SET: OnceLock<ProjectorSet> = OnceLock::new();
        SET.get_or_init(|| {
            let projectors = Polarization::ALL
                .iter()
                .flat_map(|&a| {
                    Polarization::ALL.iter().map(move |&b| Projector {
                        a,
                        b,
                        vector: StateVector::product(a.vector(), b.vector()),
                    })
                })
                .collect();
            ProjectorSet { projectors }
        })
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn index_of(&self, a: Polarization, b: Polarization) -> usize {
        6 * Polarization::ALL.iter().position(|&p| p == a).unwrap()
            + Polarization::ALL.iter().position(|&p| p == b).unwrap()
    }

    /// Probabilities `Tr(ρ Π_k)` for every setting.
    pub fn probabilities(&self, state: &TwoQubitState) -> Vec<f64> {
        self.projectors
            .iter()
            .map(|p| {
                let v = p.vector.to_vector();
                (v.adjoint() * state.rho() * v)[(0, 0)].re.max(0.0)
            })
            .collect()
    }
}

/// Coincidence counts for all 36 settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyDataset {
    /// Counts in [`ProjectorSet::standard`] order. Real-valued so that exact
    /// expectation values can be represented.
    pub counts: Vec<f64>,
    /// Integration time per setting, s.
    pub exposure: f64,
    /// Expected coincidence rate at unit projector overlap, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_rate: Option<f64>,
}

impl TomographyDataset {
    pub fn new(counts: Vec<f64>, exposure: f64, mean_rate: Option<f64>) -> Result<Self> {
        if counts.len() != N_SETTINGS {
            return Err(Error::Contract(format!("expected {N_SETTINGS} counts, got {}", counts.len())));
        }
        if let Some(c) = counts.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(Error::Contract(format!("counts must be finite and non-negative, got {c}")));
        }
        if !(exposure > 0.0) {
            return Err(Error::Contract(format!("exposure must be positive, got {exposure}")));
        }
        Ok(Self { counts, exposure, mean_rate })
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Counts normalized within each of the nine complete-basis groups.
    /// Groups with no counts yield `None`.
    pub fn basis_probabilities(&self) -> Vec<Option<f64>> {
        let set = ProjectorSet::standard();
        let mut sums = [0.0; 9];
        for (p, n) in set.projectors().iter().zip(&self.counts) {
            sums[p.group()] += n;
        }
        set.projectors()
            .iter()
            .zip(&self.counts)
            .map(|(p, n)| {
                let s = sums[p.group()];
                (s > 0.0).then(|| n / s)
            })
            .collect()
    }
}

fn check_rates(rate: f64, exposure: f64, background_rate: f64) -> Result<()> {
    if !(rate > 0.0) || !(exposure > 0.0) || !(background_rate >= 0.0) {
        return Err(Error::Contract(format!(
            "need rate > 0, exposure > 0, background >= 0; got {rate}, {exposure}, {background_rate}"
        )));
    }
    Ok(())
}

/// Mean counts per setting: `exposure · (rate·Tr(ρΠ) + background_rate/4)`.
/// The background is white, i.e. a rate on the maximally mixed state.
pub fn expected_counts(
    state: &TwoQubitState,
    rate: f64,
    exposure: f64,
    background_rate: f64,
) -> Result<TomographyDataset> {
    check_rates(rate, exposure, background_rate)?;
    let counts = ProjectorSet::standard()
        .probabilities(state)
        .into_iter()
        .map(|p| exposure * (rate * p + 0.25 * background_rate))
        .collect();
    TomographyDataset::new(counts, exposure, Some(rate))
}

/// Poisson-distributed counts around [`expected_counts`]; deterministic in `seed`.
pub fn simulate_counts(
    state: &TwoQubitState,
    rate: f64,
    exposure: f64,
    background_rate: f64,
    seed: u64,
) -> Result<TomographyDataset> {
    let mean = expected_counts(state, rate, exposure, background_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = mean.counts.iter().map(|&m| poisson_draw(&mut rng, m)).collect();
    TomographyDataset::new(counts, exposure, Some(rate))
}

pub(crate) fn poisson_draw<R: rand::Rng>(rng: &mut R, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}

/// Least-squares state estimate, Hermitian and unit trace but possibly not
/// positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub matrix: Matrix4c,
    pub min_eigenvalue: f64,
}

impl LinearEstimate {
    /// True when rounding cannot explain the negative eigenvalue.
    pub fn is_unphysical(&self) -> bool {
        self.min_eigenvalue < -crate::qmetrics::PSD_TOLERANCE
    }

    /// Closest physical state obtained by clipping negative eigenvalues.
    pub fn project_psd(&self) -> Result<TwoQubitState> {
        let eig = nalgebra::SymmetricEigen::new(self.matrix);
        let vals = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0), 0.0));
        let m = eig.eigenvectors * Matrix4c::from_diagonal(&vals) * eig.eigenvectors.adjoint();
        TwoQubitState::from_matrix_normalized(m)
    }
}

fn pauli(k: usize) -> Matrix2<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match k {
        0 => Matrix2::new(l, o, o, l),
        1 => Matrix2::new(o, l, l, o),
        2 => Matrix2::new(o, -i, i, o),
        _ => Matrix2::new(l, o, o, -l),
    }
}

/// Solves `Tr(ρ Π_k) = p_k` in the two-qubit Pauli basis with the identity
/// coefficient pinned by unit trace. `p_k` are counts normalized per
/// complete-basis group; groups with no counts are left out.
pub fn linear_inversion(dataset: &TomographyDataset) -> Result<LinearEstimate> {
    if !(dataset.total() > 0.0) {
        return Err(Error::DegenerateData("all counts are zero".to_string()));
    }
    let set = ProjectorSet::standard();
    let probs = dataset.basis_probabilities();
    let rows: Vec<(usize, f64)> =
        probs.iter().enumerate().filter_map(|(k, p)| p.map(|p| (k, p))).collect();

    // ρ = ¼ Σ s_μν σ_μ⊗σ_ν, s_00 = 1; Tr(ρ Π_ab) = ¼ Σ s_μν a_μ b_ν
    let design = DMatrix::from_fn(rows.len(), 15, |r, c| {
        let p = &set.projectors()[rows[r].0];
        let (mu, nu) = ((c + 1) / 4, (c + 1) % 4);
        0.25 * p.a.stokes()[mu] * p.b.stokes()[nu]
    });
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|(_, p)| p - 0.25));
    let svd = design.svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::DegenerateData(format!("least-squares solve failed: {e}")))?;

    let mut matrix = pauli(0).kronecker(&pauli(0)) * Complex64::new(0.25, 0.0);
    for c in 0..15 {
        let (mu, nu) = ((c + 1) / 4, (c + 1) % 4);
        matrix += pauli(mu).kronecker(&pauli(nu)) * Complex64::new(0.25 * coeffs[c], 0.0);
    }
    let min_eigenvalue = hermitian_eigenvalues(&matrix).into_iter().fold(f64::INFINITY, f64::min);
    Ok(LinearEstimate { matrix, min_eigenvalue })
}

/// Metric values for one reconstructed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub tangle: f64,
    pub purity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

impl StateMetrics {
    pub fn of(state: &TwoQubitState, target: Option<&TwoQubitState>) -> Self {
        Self {
            tangle: crate::qmetrics::tangle(state),
            purity: crate::qmetrics::purity(state),
            fidelity: target.map(|t| crate::qmetrics::fidelity(state, t)),
        }
    }
}

/// Everything learned from one dataset: the MLE state, its metrics with
/// Monte-Carlo error bars and the optimizer diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub rho: TwoQubitState,
    pub metrics: StateMetrics,
    pub error_bars: MonteCarloSummary,
    pub diagnostics: MleDiagnostics,
    pub linear_min_eigenvalue: f64,
}

/// MLE reconstruction plus Monte-Carlo uncertainties for one dataset.
pub fn reconstruct_with_errors(
    dataset: &TomographyDataset,
    target: Option<&TwoQubitState>,
    n_samples: usize,
    seed: u64,
    options: &MleOptions,
) -> Result<ReconstructionReport> {
    let linear = linear_inversion(dataset)?;
    let fit = mle_reconstruct_with(dataset, options)?;
    let error_bars = monte_carlo_uncertainty(dataset, n_samples, seed, target, options)?;
    Ok(ReconstructionReport {
        metrics: StateMetrics::of(&fit.state, target),
        rho: fit.state,
        error_bars,
        diagnostics: fit.diagnostics,
        linear_min_eigenvalue: linear.min_eigenvalue,
    })
}
