//! Pump pulse train → per-temporal-mode polarization pair states.
//!
//! A two-crystal type-I source turns a pump pulse with polarization
//! `α|H⟩ + β|V⟩` into the pair state `β|HH⟩ + α|VV⟩`. Each pump pulse yields
//! one temporal mode whose weight is the pulse's share of pump intensity
//! (single-pair, first-order regime). Frequency is traced out: the states are
//! polarization-only, which is valid when the collection filters are narrow
//! compared with the pump.

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pumpprep::PulseTrain;
use crate::qmetrics::StateVector;

/// Filter/pump RMS-width ratio below which the frequency-separable
/// approximation is accepted by default.
pub const DEFAULT_NARROWBAND_THRESHOLD: f64 = 1.0;

/// Which pump component feeds which pair term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairConvention {
    /// `α|H⟩ + β|V⟩ → β|HH⟩ + α|VV⟩`: the horizontally pumped crystal emits
    /// vertical pairs and vice versa.
    #[default]
    Swapped,
    /// `α|H⟩ + β|V⟩ → α|HH⟩ + β|VV⟩`.
    Direct,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpdcConfig {
    #[serde(default)]
    pub convention: PairConvention,
    /// Phase applied to the `|VV⟩` term by the idler-arm wave plate, rad.
    #[serde(default)]
    pub idler_phase: f64,
}

/// One temporal slot of the down-converted train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalMode {
    /// Pump delay, s.
    pub tau: f64,
    /// Probability that a detected pair belongs to this slot.
    pub weight: f64,
    /// Normalized pair state; only the `HH` and `VV` amplitudes are populated.
    pub pair_state: StateVector,
}

/// Maps each pump pulse to a temporal mode. Pulses with zero amplitude are
/// skipped with a warning.
pub fn spdc_from_pump(train: &PulseTrain, config: &SpdcConfig) -> Vec<TemporalMode> {
    let total = train.total_norm();
    let idler = Complex64::from_polar(1.0, config.idler_phase);
    let zero = Complex64::new(0.0, 0.0);
    train
        .entries()
        .iter()
        .filter_map(|entry| {
            let Some(jones) = entry.jones.normalized() else {
                warn!("skipping zero-amplitude pump pulse at tau = {:.4e} s", entry.tau);
                return None;
            };
            let (hh, vv) = match config.convention {
                PairConvention::Swapped => (jones.v, jones.h),
                PairConvention::Direct => (jones.h, jones.v),
            };
            Some(TemporalMode {
                tau: entry.tau,
                weight: entry.jones.norm_sqr() / total,
                pair_state: StateVector([hh, zero, zero, vv * idler]),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarrowbandCheck {
    /// `σ_filter / σ_pump`.
    pub ratio: f64,
    pub valid: bool,
}

/// Checks whether a collection filter is narrow enough, relative to the pump,
/// for the pair to be treated as separable in frequency.
pub fn narrowband_validity(sigma_filter: f64, sigma_pump: f64, threshold: f64) -> Result<NarrowbandCheck> {
    if !(sigma_filter >= 0.0) || !(sigma_pump > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidths must be positive, got filter={sigma_filter}, pump={sigma_pump}"
        )));
    }
    let ratio = sigma_filter / sigma_pump;
    Ok(NarrowbandCheck { ratio, valid: ratio < threshold })
}
