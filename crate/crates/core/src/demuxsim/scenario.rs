//! Scenario configuration: which pump preparation to run, the optical and
//! detector parameters, and the tomography settings. Every field has a
//! default, so a JSON file only needs the values it changes.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pumpprep::{JonesVector, OpticalElement, PumpSetting};
use crate::qmetrics::StateVector;
use crate::tomography::{LikelihoodModel, MIN_SAMPLES};

/// The eight pump preparations of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepId {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
    Viii,
}

/// Which scalar a preparation tunes to reach its target states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParameter {
    /// Final half-wave plate angle, searched within ±π/4 of the tabulated value.
    Hwp2,
    /// Idler-arm phase, searched over a full period.
    IdlerPhase,
}

impl PrepId {
    pub const ALL: [PrepId; 8] = [Self::I, Self::Ii, Self::Iii, Self::Iv, Self::V, Self::Vi, Self::Vii, Self::Viii];

    pub fn label(self) -> &'static str {
        match self {
            Self::I => "i",
            Self::Ii => "ii",
            Self::Iii => "iii",
            Self::Iv => "iv",
            Self::V => "v",
            Self::Vi => "vi",
            Self::Vii => "vii",
            Self::Viii => "viii",
        }
    }

    /// Tabulated crystal and wave-plate angles; HWP-1 is always at zero.
    pub fn setting(self) -> PumpSetting {
        let (c1, c2, q, h) = match self {
            Self::I => (0.0, 0.0, FRAC_PI_2, FRAC_PI_8),
            Self::Ii => (FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_8),
            Self::Iii => (FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, FRAC_PI_8),
            Self::Iv => (FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4, FRAC_PI_8),
            Self::V => (FRAC_PI_2, FRAC_PI_4, FRAC_PI_2, FRAC_PI_8),
            Self::Vi => (FRAC_PI_4, 0.0, 3.0 * FRAC_PI_4, 3.0 * FRAC_PI_8),
            Self::Vii => (FRAC_PI_4, 0.0, 3.0 * FRAC_PI_4, FRAC_PI_4),
            Self::Viii => (FRAC_PI_4, 0.0, FRAC_PI_2, 0.0),
        };
        PumpSetting { hwp1: 0.0, crystal1: c1, crystal2: c2, qwp1: q, hwp2: h }
    }

    /// Tabulated target pair states for modes A, B, C (`None` = empty mode).
    pub fn targets(self) -> [Option<StateVector>; 3] {
        use StateVector as S;
        match self {
            Self::I => [None, None, Some(S::phi_plus())],
            Self::Ii => [None, Some(S::phi_plus()), None],
            Self::Iii => [Some(S::phi_plus()), None, None],
            Self::Iv => [Some(S::hh()), Some(S::vv()), None],
            Self::V => [Some(S::phi_minus_i()), Some(S::phi_plus_i()), None],
            Self::Vi => [Some(S::phi_minus_i()), Some(S::vv()), Some(S::phi_plus_i())],
            Self::Vii => [Some(S::phi_minus_i()), Some(S::phi_plus()), Some(S::phi_plus_i())],
            Self::Viii => [Some(S::vv()), Some(S::phi_minus()), Some(S::hh())],
        }
    }

    /// Preparations whose tabulated setting was tuned in the lab to absorb
    /// an uncontrolled phase.
    pub fn fit_parameter(self) -> Option<FitParameter> {
        match self {
            Self::Vi | Self::Vii => Some(FitParameter::Hwp2),
            Self::Viii => Some(FitParameter::IdlerPhase),
            _ => None,
        }
    }
}

impl fmt::Display for PrepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PrepId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        Self::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown preparation '{s}', expected i..viii")))
    }
}

/// A preparation given by name, by explicit angles, or as a free element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrepSpec {
    Preset(PrepId),
    Setting(PumpSetting),
    Elements { elements: Vec<OpticalElement> },
}

impl Default for PrepSpec {
    fn default() -> Self {
        Self::Preset(PrepId::Vii)
    }
}

impl PrepSpec {
    pub fn preset(&self) -> Option<PrepId> {
        match self {
            Self::Preset(p) => Some(*p),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Preset(p) => p.label().to_string(),
            Self::Setting(_) => "custom-setting".to_string(),
            Self::Elements { .. } => "custom-elements".to_string(),
        }
    }

    /// Element list with the given crystal delay and residual phase.
    pub fn elements(&self, physics: &Physics) -> Vec<OpticalElement> {
        let delay = physics.crystal_delay;
        match self {
            Self::Preset(p) => p.setting().elements(delay, physics.residual_phase),
            Self::Setting(s) => s.elements(delay, physics.residual_phase),
            Self::Elements { elements } => elements.clone(),
        }
    }
}

/// Optical parameters, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub signal_wavelength: f64,
    pub signal_fwhm: f64,
    pub escort_wavelength: f64,
    pub escort_fwhm: f64,
    /// Signal chirp `A`, s²; the escort carries `-A`.
    pub chirp: f64,
    /// Birefringent delay of each crystal, s.
    pub crystal_delay: f64,
    /// Extra phase on the slow axis of the second crystal, rad.
    pub residual_phase: f64,
    /// Phase on the `|VV⟩` pair term set in the idler arm, rad.
    pub idler_phase: f64,
    /// Escort arrival time on the pump-delay axis, s; defaults to the centre
    /// of the occupied slots.
    pub escort_delay: Option<f64>,
    pub pump_polarization: JonesVector,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            signal_wavelength: 809.06e-9,
            signal_fwhm: 3.9e-9,
            escort_wavelength: 786.2e-9,
            escort_fwhm: 6.3e-9,
            chirp: 696e-27,
            crystal_delay: 2.69e-12,
            residual_phase: 0.0,
            idler_phase: 0.0,
            escort_delay: None,
            pump_polarization: JonesVector::horizontal(),
        }
    }
}

/// Count rates and integration times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Detector {
    /// Coincidence rate of the whole pair train at unit conversion
    /// efficiency, counts/s.
    pub pair_rate: f64,
    /// Per-channel signal rates overriding `pair_rate × weight × efficiency`.
    pub signal_rates: Option<Vec<f64>>,
    /// Per-channel white background rates, counts/s.
    pub background_rates: Vec<f64>,
    /// Integration time per setting for the demultiplexed channels, s.
    pub exposure: f64,
    /// Coincidence rate at the slow detector, counts/s.
    pub in_rate: f64,
    /// Integration time per setting for the slow detector, s.
    pub in_exposure: f64,
}

impl Default for Detector {
    fn default() -> Self {
        Self {
            pair_rate: 13.9,
            signal_rates: None,
            background_rates: vec![0.55, 0.34, 0.40],
            exposure: 360.0,
            in_rate: 44.0e3,
            in_exposure: 4.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySettings {
    /// Skip count simulation and report the noiseless states only.
    pub noiseless: bool,
    pub mc_samples: usize,
    pub model: LikelihoodModel,
    pub max_iterations: usize,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self { noiseless: false, mc_samples: 200, model: LikelihoodModel::RawPoisson, max_iterations: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub prep: PrepSpec,
    /// Tune the preparation's fit parameter towards its tabulated targets.
    pub fit: bool,
    pub physics: Physics,
    pub detector: Detector,
    pub tomography: TomographySettings,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            prep: PrepSpec::default(),
            fit: true,
            physics: Physics::default(),
            detector: Detector::default(),
            tomography: TomographySettings::default(),
            seed: 42,
        }
    }
}

impl Scenario {
    pub fn preset(prep: PrepId) -> Self {
        Self { prep: PrepSpec::Preset(prep), ..Self::default() }
    }

    /// Same scenario without count noise.
    pub fn noiseless(mut self) -> Self {
        self.tomography.noiseless = true;
        self
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        let positive = [
            ("signal_wavelength", p.signal_wavelength),
            ("signal_fwhm", p.signal_fwhm),
            ("escort_wavelength", p.escort_wavelength),
            ("escort_fwhm", p.escort_fwhm),
            ("crystal_delay", p.crystal_delay),
            ("exposure", self.detector.exposure),
            ("in_exposure", self.detector.in_exposure),
            ("in_rate", self.detector.in_rate),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Contract(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if p.chirp == 0.0 || !p.chirp.is_finite() {
            return Err(Error::Contract(format!("chirp must be non-zero and finite, got {}", p.chirp)));
        }
        if !(self.detector.pair_rate >= 0.0) {
            return Err(Error::Contract(format!("pair_rate must be non-negative, got {}", self.detector.pair_rate)));
        }
        let rates = self.detector.background_rates.iter().chain(self.detector.signal_rates.iter().flatten());
        if let Some(r) = rates.into_iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::Contract(format!("rates must be non-negative, got {r}")));
        }
        if p.pump_polarization.normalized().is_none() {
            return Err(Error::Contract("pump polarization has zero norm".to_string()));
        }
        if !self.tomography.noiseless && self.tomography.mc_samples < MIN_SAMPLES {
            return Err(Error::Contract(format!(
                "mc_samples must be at least {MIN_SAMPLES}, got {}",
                self.tomography.mc_samples
            )));
        }
        for e in self.prep.elements(p) {
            e.validate()?;
        }
        Ok(())
    }
}
