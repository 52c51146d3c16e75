//! Pump-preparation optics: wave plates and birefringent delay crystals acting
//! on a train of polarized pulses.
//!
//! Angles follow the convention that a crystal at angle zero has its slow axis
//! horizontal. A crystal splits every incoming pulse into a fast-axis copy at
//! the original delay and a slow-axis copy delayed by the crystal's walkoff.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulses closer than this (s) are treated as the same temporal slot and
/// summed coherently.
pub const TAU_MERGE_TOLERANCE: f64 = 1e-15;

/// Entries carrying less than this fraction of the train's energy are dropped.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-20;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Complex polarization amplitudes on the horizontal/vertical basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub h: Complex64,
    pub v: Complex64,
}

impl JonesVector {
    pub const fn new(h: Complex64, v: Complex64) -> Self {
        Self { h, v }
    }

    pub fn horizontal() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn diagonal() -> Self {
        Self::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0))
    }

    pub fn antidiagonal() -> Self {
        Self::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(-FRAC_1_SQRT_2, 0.0))
    }

    /// `(|H⟩ + i|V⟩)/√2`.
    pub fn circular_plus() -> Self {
        Self::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2))
    }

    /// `(|H⟩ - i|V⟩)/√2`.
    pub fn circular_minus() -> Self {
        Self::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, -FRAC_1_SQRT_2))
    }

    /// Linear polarization at `angle` from horizontal.
    pub fn linear(angle: f64) -> Self {
        Self::new(Complex64::new(angle.cos(), 0.0), Complex64::new(angle.sin(), 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        (n > 0.0).then(|| Self::new(self.h / n, self.v / n))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// The orthogonal state `(-v*, h*)`.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.v.conj(), self.h.conj())
    }
}

impl Add for JonesVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.h + rhs.h, self.v + rhs.v)
    }
}

impl Mul<Complex64> for JonesVector {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        Self::new(self.h * rhs, self.v * rhs)
    }
}

/// 2×2 Jones matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub fn diagonal(a: Complex64, b: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self([[a, z], [z, b]])
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    /// `R(θ) · self · R(-θ)`: the element with its axis turned to `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        Self::rotation(angle).compose(self).compose(&Self::rotation(-angle))
    }

    /// `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self(out)
    }

    pub fn apply(&self, j: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector::new(m[0][0] * j.h + m[0][1] * j.v, m[1][0] * j.h + m[1][1] * j.v)
    }

    /// Half-wave plate with its axis at `angle`.
    pub fn half_wave(angle: f64) -> Self {
        Self::diagonal(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)).rotated(angle)
    }

    /// Quarter-wave plate with its axis at `angle`.
    pub fn quarter_wave(angle: f64) -> Self {
        Self::diagonal(Complex64::new(1.0, 0.0), I).rotated(angle)
    }
}

/// One element in the pump path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OpticalElement {
    /// Birefringent delay crystal. The slow-axis component picks up `delay`
    /// and an optional extra phase from crystal-length mismatch.
    Birefringent {
        delay: f64,
        axis_angle: f64,
        #[serde(default)]
        residual_phase: f64,
    },
    HalfWave { angle: f64 },
    QuarterWave { angle: f64 },
}

impl OpticalElement {
    pub fn crystal(delay: f64, axis_angle: f64) -> Self {
        Self::Birefringent { delay, axis_angle, residual_phase: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Birefringent { delay, axis_angle, residual_phase } => {
                if !(delay > 0.0) || !axis_angle.is_finite() || !residual_phase.is_finite() {
                    return Err(Error::Contract(format!(
                        "birefringent crystal needs positive delay and finite angles, got delay={delay}, angle={axis_angle}"
                    )));
                }
            }
            Self::HalfWave { angle } | Self::QuarterWave { angle } => {
                if !angle.is_finite() {
                    return Err(Error::Contract(format!("wave-plate angle must be finite, got {angle}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEntry {
    /// Delay relative to the train clock, s.
    pub tau: f64,
    pub jones: JonesVector,
}

/// Time-ordered pump pulses. Delays are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    entries: Vec<PulseEntry>,
}

impl PulseTrain {
    pub fn new(entries: Vec<PulseEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| !(w[1].tau > w[0].tau)) {
            return Err(Error::Contract("pulse delays must be strictly increasing".to_string()));
        }
        Ok(Self { entries })
    }

    pub fn single(jones: JonesVector) -> Self {
        Self { entries: vec![PulseEntry { tau: 0.0, jones }] }
    }

    pub fn entries(&self) -> &[PulseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Σ (|h|² + |v|²)` over the train.
    pub fn total_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.jones.norm_sqr()).sum()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.tau).collect()
    }

    /// Sorts, merges coincident delays coherently and drops empty slots.
    fn from_unsorted(mut raw: Vec<PulseEntry>) -> Self {
        raw.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        let mut merged: Vec<PulseEntry> = Vec::with_capacity(raw.len());
        for e in raw {
            match merged.last_mut() {
                Some(last) if (e.tau - last.tau).abs() <= TAU_MERGE_TOLERANCE => {
                    last.jones = last.jones + e.jones;
                }
                _ => merged.push(e),
            }
        }
        let total: f64 = merged.iter().map(|e| e.jones.norm_sqr()).sum();
        merged.retain(|e| e.jones.norm_sqr() > NEGLIGIBLE_WEIGHT * total);
        Self { entries: merged }
    }
}

/// Propagates a train through one element.
pub fn apply_element(train: &PulseTrain, elem: &OpticalElement) -> PulseTrain {
    match *elem {
        OpticalElement::HalfWave { angle } => map_jones(train, &JonesMatrix::half_wave(angle)),
        OpticalElement::QuarterWave { angle } => map_jones(train, &JonesMatrix::quarter_wave(angle)),
        OpticalElement::Birefringent { delay, axis_angle, residual_phase } => {
            let slow = JonesVector::linear(axis_angle);
            let fast = slow.orthogonal();
            let extra = Complex64::from_polar(1.0, residual_phase);
            let mut raw = Vec::with_capacity(2 * train.len());
            for e in &train.entries {
                raw.push(PulseEntry { tau: e.tau, jones: fast * fast.inner(&e.jones) });
                raw.push(PulseEntry {
                    tau: e.tau + delay,
                    jones: slow * (slow.inner(&e.jones) * extra),
                });
            }
            PulseTrain::from_unsorted(raw)
        }
    }
}

fn map_jones(train: &PulseTrain, m: &JonesMatrix) -> PulseTrain {
    PulseTrain {
        entries: train
            .entries
            .iter()
            .map(|e| PulseEntry { tau: e.tau, jones: m.apply(&e.jones) })
            .collect(),
    }
}

/// Folds [`apply_element`] over `elements` in beam order, starting from a
/// single pulse at zero delay.
pub fn prepare_pump(elements: &[OpticalElement], input: JonesVector) -> Result<PulseTrain> {
    for e in elements {
        e.validate()?;
    }
    Ok(elements
        .iter()
        .fold(PulseTrain::single(input), |train, e| apply_element(&train, e)))
}

/// Upper bound on the number of distinct pulses from `n_crystals` crystals:
/// `n + 1` for identical delays, `2^n` otherwise.
pub fn pulse_count_bounds(n_crystals: u32, identical: bool) -> u64 {
    if identical {
        u64::from(n_crystals) + 1
    } else {
        1u64 << n_crystals
    }
}

/// Angles of one pump-preparation setting, in beam order after HWP-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSetting {
    #[serde(default)]
    pub hwp1: f64,
    pub crystal1: f64,
    pub crystal2: f64,
    pub qwp1: f64,
    pub hwp2: f64,
}

impl PumpSetting {
    /// Ordered element list HWP-1 → crystal 1 → crystal 2 → QWP-1 → HWP-2.
    /// `residual_phase` is applied to the slow axis of the second crystal.
    pub fn elements(&self, crystal_delay: f64, residual_phase: f64) -> Vec<OpticalElement> {
        vec![
            OpticalElement::HalfWave { angle: self.hwp1 },
            OpticalElement::crystal(crystal_delay, self.crystal1),
            OpticalElement::Birefringent {
                delay: crystal_delay,
                axis_angle: self.crystal2,
                residual_phase,
            },
            OpticalElement::QuarterWave { angle: self.qwp1 },
            OpticalElement::HalfWave { angle: self.hwp2 },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    const T: f64 = 2.69e-12;

    fn overlap(a: &JonesVector, b: &JonesVector) -> f64 {
        a.normalized().unwrap().inner(&b.normalized().unwrap()).norm_sqr()
    }

    #[test]
    fn aligned_crystal_only_delays() {
        let train = prepare_pump(&[OpticalElement::crystal(T, 0.0)], JonesVector::horizontal()).unwrap();
        assert_eq!(train.len(), 1);
        assert!((train.entries()[0].tau - T).abs() < 1e-24);
        assert!((overlap(&train.entries()[0].jones, &JonesVector::horizontal()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_input_splits_evenly() {
        let train = prepare_pump(&[OpticalElement::crystal(T, 0.0)], JonesVector::diagonal()).unwrap();
        assert_eq!(train.taus(), vec![0.0, T]);
        let [a, b] = [train.entries()[0].jones, train.entries()[1].jones];
        assert!((a.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((b.norm_sqr() - 0.5).abs() < 1e-12);
        assert!(a.inner(&b).norm() < 1e-12);
    }

    #[test]
    fn crossed_crystals_give_quarter_half_quarter() {
        let els = [OpticalElement::crystal(T, FRAC_PI_4), OpticalElement::crystal(T, 0.0)];
        let train = prepare_pump(&els, JonesVector::horizontal()).unwrap();
        let w: Vec<f64> = train.entries().iter().map(|e| e.jones.norm_sqr()).collect();
        assert_eq!(w.len(), 3);
        for (got, want) in w.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    fn setting(c1: f64, c2: f64, q: f64, h: f64) -> Vec<OpticalElement> {
        PumpSetting { hwp1: 0.0, crystal1: c1, crystal2: c2, qwp1: q, hwp2: h }.elements(T, 0.0)
    }

    #[test]
    fn table_setting_i_single_late_diagonal_pulse() {
        let train = prepare_pump(&setting(0.0, 0.0, FRAC_PI_2, FRAC_PI_8), JonesVector::horizontal()).unwrap();
        assert_eq!(train.len(), 1);
        assert!((train.entries()[0].tau - 2.0 * T).abs() < 1e-24);
        assert!((overlap(&train.entries()[0].jones, &JonesVector::diagonal()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_setting_iii_single_early_pulse() {
        let train =
            prepare_pump(&setting(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, FRAC_PI_8), JonesVector::horizontal()).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(train.entries()[0].tau, 0.0);
    }

    #[test]
    fn table_setting_iv_two_orthogonal_pulses() {
        let train = prepare_pump(
            &setting(FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4, FRAC_PI_8),
            JonesVector::horizontal(),
        )
        .unwrap();
        assert_eq!(train.taus(), vec![0.0, T]);
        let (a, b) = (train.entries()[0].jones, train.entries()[1].jones);
        assert!(a.inner(&b).norm() < 1e-12);
        // pump V in mode A, H in mode B
        assert!((overlap(&a, &JonesVector::vertical()) - 1.0).abs() < 1e-12);
        assert!((overlap(&b, &JonesVector::horizontal()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_path_is_identity() {
        let input = JonesVector::circular_plus();
        let train = prepare_pump(&[], input).unwrap();
        assert_eq!(train.entries(), &[PulseEntry { tau: 0.0, jones: input }]);
    }

    #[test]
    fn invalid_crystal_is_a_contract_error() {
        let err = prepare_pump(&[OpticalElement::crystal(-1.0, 0.0)], JonesVector::horizontal());
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn count_bounds() {
        assert_eq!(pulse_count_bounds(2, true), 3);
        assert_eq!(pulse_count_bounds(2, false), 4);
        assert_eq!(pulse_count_bounds(0, true), 1);
        assert_eq!(pulse_count_bounds(0, false), 1);
    }

    #[test]
    fn unsorted_train_is_rejected() {
        let e = |tau| PulseEntry { tau, jones: JonesVector::horizontal() };
        assert!(PulseTrain::new(vec![e(1.0), e(0.0)]).is_err());
        assert!(PulseTrain::new(vec![e(0.0), e(0.0)]).is_err());
    }

    #[test]
    fn residual_phase_changes_only_the_merged_pulse() {
        let base = PumpSetting { hwp1: 0.0, crystal1: FRAC_PI_4, crystal2: 0.0, qwp1: 0.0, hwp2: 0.0 };
        let a = prepare_pump(&base.elements(T, 0.0), JonesVector::horizontal()).unwrap();
        let b = prepare_pump(&base.elements(T, 1.0), JonesVector::horizontal()).unwrap();
        assert_eq!(a.len(), 3);
        for k in [0, 2] {
            assert!((overlap(&a.entries()[k].jones, &b.entries()[k].jones) - 1.0).abs() < 1e-12);
        }
        assert!(overlap(&a.entries()[1].jones, &b.entries()[1].jones) < 0.99);
    }
}
