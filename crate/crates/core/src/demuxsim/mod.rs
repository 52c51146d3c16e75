//! End-to-end scenarios: pump preparation → pair generation → chirped
//! upconversion → per-channel detection and tomography.
//!
//! Channels are slots on the pump-delay axis. For two crystals of delay `T`
//! the slots are `0, T, 2T`, labelled A, B, C. Each slot maps to one comb
//! line; a slot without a pump pulse still has a detector behind it and sees
//! only background.

mod report;
mod scenario;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pumpprep::{prepare_pump, OpticalElement, PulseTrain};
use crate::qmetrics::{fidelity_pure, mix, Matrix4c, StateVector, TwoQubitState};
use crate::spdc::{spdc_from_pump, SpdcConfig, TemporalMode};
use crate::spectral::{omega_to_wavelength, GaussianChirpedPulse};
use crate::tomography::{
    reconstruct_with_errors, simulate_counts, MleOptions, ReconstructionReport, StateMetrics,
};
use crate::upconvert::{comb_channels, crosstalk_ratio, CombChannel};

pub use report::{comb_spectrum, emit_report, write_summary_csv, CombSpectrum, EmittedFiles, SUMMARY_HEADER};
pub use scenario::{Detector, FitParameter, Physics, PrepId, PrepSpec, Scenario, TomographySettings};

/// Channel signal weights below this count as an empty slot.
pub const EMPTY_CHANNEL_WEIGHT: f64 = 1e-12;
/// Points in the coarse scan that precedes the fit refinement.
const FIT_SCAN_POINTS: usize = 721;
/// Score differences below this are treated as ties.
const FIT_TIE: f64 = 1e-12;

/// Detector label of slot `i`: A, B, C, …
pub fn slot_label(i: usize) -> String {
    let c = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        c.to_string()
    } else {
        format!("{c}{}", i / 26)
    }
}

/// State seen by a detector too slow to resolve the pulses:
/// `Σ b_j |ψ_j⟩⟨ψ_j|` with the weights renormalized.
pub fn slow_detector_state(modes: &[TemporalMode]) -> Result<TwoQubitState> {
    if modes.is_empty() {
        return Err(Error::Contract("slow detector needs at least one mode".to_string()));
    }
    let total: f64 = modes.iter().map(|m| m.weight).sum();
    if !(total > 0.0) {
        return Err(Error::Contract("temporal modes carry no weight".to_string()));
    }
    let states = modes.iter().map(|m| TwoQubitState::from_pure(&m.pair_state)).collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = modes.iter().map(|m| m.weight / total).collect();
    mix(&states, &weights)
}

/// Signal weight reaching channel `m`: `Σ_j X[j][m] b_j`.
pub fn channel_signal_weight(m: usize, modes: &[TemporalMode], crosstalk: &[Vec<f64>]) -> f64 {
    modes.iter().zip(crosstalk).map(|(mode, row)| row[m] * mode.weight).sum()
}

/// State at channel `m`: the crosstalk-weighted mixture of all modes plus a
/// white background making up `background_fraction` of the detections.
///
/// `crosstalk[j][m]` is the relative signal of mode `j` at channel `m`.
pub fn channel_state(
    m: usize,
    modes: &[TemporalMode],
    crosstalk: &[Vec<f64>],
    background_fraction: f64,
) -> Result<TwoQubitState> {
    if crosstalk.len() != modes.len() || crosstalk.iter().any(|row| row.len() <= m) {
        return Err(Error::Contract(format!(
            "crosstalk must have one row per mode ({}) and a column for channel {m}",
            modes.len()
        )));
    }
    if !(0.0..1.0).contains(&background_fraction) {
        return Err(Error::Contract(format!("background fraction must lie in [0, 1), got {background_fraction}")));
    }
    let mut rho = Matrix4c::zeros();
    for (mode, row) in modes.iter().zip(crosstalk) {
        let w = row[m] * mode.weight;
        if w < 0.0 {
            return Err(Error::Contract(format!("negative channel weight {w}")));
        }
        rho += mode.pair_state.outer() * num_complex::Complex64::new(w / mode.pair_state.norm_sqr(), 0.0);
    }
    let signal = rho.trace().re;
    if !(signal > 0.0) {
        return Err(Error::DegenerateChannel { channel: slot_label(m) });
    }
    let beta = background_fraction / (1.0 - background_fraction) * signal;
    rho += Matrix4c::identity() * num_complex::Complex64::new(beta / 4.0, 0.0);
    TwoQubitState::from_matrix_normalized(rho)
}

/// Result of tuning a preparation towards its tabulated targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub parameter: FitParameter,
    pub tabulated: f64,
    pub fitted: f64,
    /// Weighted target fidelity `Σ b_k |⟨target_k|ψ_k⟩|²` at the fitted value.
    pub score: f64,
}

/// The deterministic part of a scenario: everything up to the channel states.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub elements: Vec<OpticalElement>,
    pub train: PulseTrain,
    pub modes: Vec<TemporalMode>,
    /// Slot positions on the pump-delay axis, s.
    pub slots: Vec<f64>,
    pub escort_delay: f64,
    /// Comb line of each slot.
    pub comb: Vec<CombChannel>,
    /// `crosstalk[j][m]`: mode `j` (rows) into slot `m` (columns).
    pub crosstalk: Vec<Vec<f64>>,
    pub signal: GaussianChirpedPulse,
    pub escort: GaussianChirpedPulse,
    pub spdc: SpdcConfig,
    pub fit: Option<FitOutcome>,
}

impl Pipeline {
    /// Weight of the mode sitting in slot `m`, zero for an empty slot.
    pub fn slot_weight(&self, m: usize) -> f64 {
        let tol = slot_tolerance(&self.slots);
        self.modes.iter().filter(|md| (md.tau - self.slots[m]).abs() <= tol).map(|md| md.weight).sum()
    }

    pub fn channel_weight(&self, m: usize) -> f64 {
        channel_signal_weight(m, &self.modes, &self.crosstalk)
    }

    pub fn is_empty_channel(&self, m: usize) -> bool {
        self.channel_weight(m) < EMPTY_CHANNEL_WEIGHT
    }

    /// Noiseless channel state, or the maximally mixed state for an empty slot.
    pub fn theo_state(&self, m: usize) -> Result<TwoQubitState> {
        if self.is_empty_channel(m) {
            Ok(TwoQubitState::maximally_mixed())
        } else {
            channel_state(m, &self.modes, &self.crosstalk, 0.0)
        }
    }

    pub fn in_state(&self) -> Result<TwoQubitState> {
        slow_detector_state(&self.modes)
    }
}

fn slot_tolerance(slots: &[f64]) -> f64 {
    let span = slots.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    1e-6 * span.max(1e-15)
}

/// Slot positions: multiples of the common crystal delay when every crystal
/// has it, merged with the delays actually present in the train.
fn slot_positions(elements: &[OpticalElement], train: &PulseTrain, crystal_delay: f64) -> Vec<f64> {
    let delays: Vec<f64> = elements
        .iter()
        .filter_map(|e| match e {
            OpticalElement::Birefringent { delay, .. } => Some(*delay),
            _ => None,
        })
        .collect();
    let mut slots = train.taus();
    if delays.iter().all(|d| (d - crystal_delay).abs() <= 1e-9 * crystal_delay) {
        slots.extend((0..=delays.len()).map(|k| k as f64 * crystal_delay));
    }
    slots.sort_by(f64::total_cmp);
    let tol = slot_tolerance(&slots);
    slots.dedup_by(|a, b| (*a - *b).abs() <= tol);
    slots
}

fn target_score(modes: &[TemporalMode], slots: &[f64], targets: &[Option<StateVector>]) -> f64 {
    let tol = slot_tolerance(slots);
    modes
        .iter()
        .filter_map(|md| {
            let k = slots.iter().position(|s| (s - md.tau).abs() <= tol)?;
            let target = targets.get(k)?.as_ref()?;
            let psi = TwoQubitState::from_pure(&md.pair_state).ok()?;
            Some(md.weight * fidelity_pure(&psi, target))
        })
        .sum()
}

/// Maximizes `f` on `[lo, hi]`: coarse scan, then golden-section refinement
/// around the best sample. Ties within [`FIT_TIE`] go to the sample nearest
/// `preferred`, and `preferred` itself wins if it is within a tie of the
/// optimum.
fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, preferred: f64) -> (f64, f64) {
    let h = (hi - lo) / (FIT_SCAN_POINTS - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..FIT_SCAN_POINTS).map(|i| lo + i as f64 * h).map(|x| (x, f(x))).collect();
    let best = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut x, mut fx) = samples
        .iter()
        .filter(|s| s.1 >= best - FIT_TIE)
        .min_by(|a, b| (a.0 - preferred).abs().total_cmp(&(b.0 - preferred).abs()))
        .copied()
        .unwrap();

    let (mut a, mut b) = ((x - h).max(lo), (x + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 * (1.0 + x.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if fm > fx {
        x = xm;
        fx = fm;
    }
    let fp = f(preferred);
    if (lo..=hi).contains(&preferred) && fp >= fx - FIT_TIE {
        return (preferred, fp);
    }
    (x, fx)
}

fn modes_for(elements: &[OpticalElement], physics: &Physics, spdc: &SpdcConfig) -> Result<(PulseTrain, Vec<TemporalMode>)> {
    let input = physics.pump_polarization.normalized().ok_or_else(|| Error::Contract("zero pump".to_string()))?;
    let train = prepare_pump(elements, input)?;
    let modes = spdc_from_pump(&train, spdc);
    Ok((train, modes))
}

/// Builds the noiseless pipeline, applying the preparation fit if enabled.
pub fn build_pipeline(s: &Scenario) -> Result<Pipeline> {
    s.validate()?;
    let physics = &s.physics;
    let mut spdc = SpdcConfig { idler_phase: physics.idler_phase, ..Default::default() };
    let mut elements = s.prep.elements(physics);
    let mut fit = None;

    if let (true, Some(prep)) = (s.fit, s.prep.preset()) {
        if let Some(parameter) = prep.fit_parameter() {
            let targets = prep.targets();
            let (train0, _) = modes_for(&elements, physics, &spdc)?;
            let slots = slot_positions(&elements, &train0, physics.crystal_delay);
            let outcome = match parameter {
                FitParameter::Hwp2 => {
                    let base = prep.setting();
                    let score = |x: f64| {
                        let setting = crate::pumpprep::PumpSetting { hwp2: x, ..base };
                        modes_for(&setting.elements(physics.crystal_delay, physics.residual_phase), physics, &spdc)
                            .map(|(_, m)| target_score(&m, &slots, &targets))
                            .unwrap_or(f64::NEG_INFINITY)
                    };
                    let (x, f) = maximize_1d(score, base.hwp2 - PI / 4.0, base.hwp2 + PI / 4.0, base.hwp2);
                    elements = crate::pumpprep::PumpSetting { hwp2: x, ..base }
                        .elements(physics.crystal_delay, physics.residual_phase);
                    FitOutcome { parameter, tabulated: base.hwp2, fitted: x, score: f }
                }
                FitParameter::IdlerPhase => {
                    let score = |x: f64| {
                        let cfg = SpdcConfig { idler_phase: x, ..spdc };
                        target_score(&spdc_from_pump(&train0, &cfg), &slots, &targets)
                    };
                    let (x, f) = maximize_1d(score, -PI, PI, physics.idler_phase);
                    spdc.idler_phase = x;
                    FitOutcome { parameter, tabulated: physics.idler_phase, fitted: x, score: f }
                }
            };
            log::info!("prep {prep}: fitted {:?} {:.6} -> {:.6} (score {:.6})", parameter, outcome.tabulated, outcome.fitted, outcome.score);
            fit = Some(outcome);
        }
    }

    let (train, modes) = modes_for(&elements, physics, &spdc)?;
    if modes.is_empty() {
        return Err(Error::Contract("preparation leaves no pump pulse".to_string()));
    }
    let slots = slot_positions(&elements, &train, physics.crystal_delay);
    let escort_delay = physics.escort_delay.unwrap_or(0.5 * (slots[0] + slots[slots.len() - 1]));

    let signal = GaussianChirpedPulse::from_filter(physics.signal_wavelength, physics.signal_fwhm, physics.chirp)?;
    let escort = GaussianChirpedPulse::from_filter(physics.escort_wavelength, physics.escort_fwhm, -physics.chirp)?;
    let rel: Vec<f64> = slots.iter().map(|t| t - escort_delay).collect();
    let comb = comb_channels(&signal, &escort, &rel)?;
    let crosstalk = modes
        .iter()
        .map(|md| {
            rel.iter()
                .map(|&tm| crosstalk_ratio(md.tau - escort_delay, tm, signal.sigma, escort.sigma, physics.chirp))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Pipeline { elements, train, modes, slots, escort_delay, comb, crosstalk, signal, escort, spdc, fit })
}

/// Position and shape of one comb line in convenient units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombInfo {
    pub line: CombChannel,
    pub center_wavelength_nm: f64,
    pub center_frequency_ghz: f64,
    /// Offset from the zero-delay line `ω_s + ω_e`, GHz.
    pub offset_ghz: f64,
    pub rms_width_ghz: f64,
    pub fwhm_ghz: f64,
}

impl CombInfo {
    fn new(line: CombChannel, zero_delay_omega: f64) -> Result<Self> {
        let ghz = |w: f64| w / (2.0 * PI) / 1e9;
        Ok(Self {
            center_wavelength_nm: omega_to_wavelength(line.center_omega)? * 1e9,
            center_frequency_ghz: ghz(line.center_omega),
            offset_ghz: ghz(line.center_omega - zero_delay_omega),
            rms_width_ghz: ghz(line.rms_width),
            fwhm_ghz: ghz(line.rms_width) * crate::spectral::fwhm_per_rms(),
            line,
        })
    }
}

/// Simulated measurement of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Detected rate per complete measurement basis, counts/s.
    pub counts_cps: f64,
    pub counts_err: f64,
    pub reconstruction: ReconstructionReport,
}

/// One row of the results table: the slow detector ("in") or one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRow {
    pub detector: String,
    /// True for a channel whose slot holds no pump pulse.
    pub background_only: bool,
    /// Pair-train weight in this slot (1 for the slow detector).
    pub weight: f64,
    pub signal_rate: f64,
    pub background_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb: Option<CombInfo>,
    /// `X[j][m]` for every mode `j` into this channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosstalk: Option<Vec<f64>>,
    pub theo_rho: TwoQubitState,
    pub theo: StateMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemuxReport {
    pub prep: String,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitOutcome>,
    pub modes: Vec<TemporalMode>,
    pub escort_delay: f64,
    /// Mean spacing of adjacent comb lines, GHz and nm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_spacing_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_spacing_nm: Option<f64>,
    /// Slow detector first, then channels A, B, C, …
    pub rows: Vec<ChannelRow>,
}

impl DemuxReport {
    pub fn row(&self, detector: &str) -> Option<&ChannelRow> {
        self.rows.iter().find(|r| r.detector == detector)
    }

    pub fn channels(&self) -> impl Iterator<Item = &ChannelRow> {
        self.rows.iter().filter(|r| r.comb.is_some())
    }
}

/// Distinct, reproducible seed for stream `k` of a run.
fn derive_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add((k + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct RowPlan {
    row: ChannelRow,
    /// State, total rate and exposure to simulate, if anything is detected.
    simulate: Option<(TwoQubitState, f64, f64)>,
}

/// Runs a full scenario.
pub fn run_scenario(s: &Scenario) -> Result<DemuxReport> {
    let label = s.prep.label();
    let ctx = |e: Error| e.with_context(format!("scenario prep {label}"));
    let pipe = build_pipeline(s).map_err(ctx)?;
    let n = pipe.slots.len();

    let det = &s.detector;
    if det.background_rates.len() < n {
        return Err(ctx(Error::Contract(format!(
            "{} background rates given for {n} channels",
            det.background_rates.len()
        ))));
    }
    if let Some(r) = &det.signal_rates {
        if r.len() < n {
            return Err(ctx(Error::Contract(format!("{} signal rates given for {n} channels", r.len()))));
        }
    }

    let in_theo = pipe.in_state().map_err(ctx)?;
    let mut plans = vec![RowPlan {
        row: ChannelRow {
            detector: "in".to_string(),
            background_only: false,
            weight: 1.0,
            signal_rate: det.in_rate,
            background_rate: 0.0,
            comb: None,
            crosstalk: None,
            theo: StateMetrics::of(&in_theo, None),
            theo_rho: in_theo.clone(),
            measured: None,
        },
        simulate: Some((in_theo, det.in_rate, det.in_exposure)),
    }];

    let zero_delay = pipe.signal.omega0 + pipe.escort.omega0;
    for m in 0..n {
        let name = slot_label(m);
        let empty = pipe.is_empty_channel(m);
        let w = pipe.channel_weight(m);
        let signal_rate = match &det.signal_rates {
            Some(r) => r[m],
            None => det.pair_rate * w,
        };
        let background_rate = det.background_rates[m];
        let theo = pipe.theo_state(m).map_err(|e| e.with_context(format!("channel {name}"))).map_err(ctx)?;
        let simulate = if empty || signal_rate == 0.0 {
            (background_rate > 0.0).then(|| (TwoQubitState::maximally_mixed(), background_rate, det.exposure))
        } else {
            let f = background_rate / (background_rate + signal_rate);
            let st = channel_state(m, &pipe.modes, &pipe.crosstalk, f).map_err(ctx)?;
            Some((st, signal_rate + background_rate, det.exposure))
        };
        plans.push(RowPlan {
            row: ChannelRow {
                detector: name,
                background_only: empty,
                weight: pipe.slot_weight(m),
                signal_rate: if empty { 0.0 } else { signal_rate },
                background_rate,
                comb: Some(CombInfo::new(pipe.comb[m], zero_delay).map_err(ctx)?),
                crosstalk: Some(pipe.crosstalk.iter().map(|r| r[m]).collect()),
                theo: StateMetrics::of(&theo, None),
                theo_rho: theo,
                measured: None,
            },
            simulate,
        });
    }

    if !s.tomography.noiseless {
        let options = MleOptions { model: s.tomography.model, max_iterations: s.tomography.max_iterations, ..Default::default() };
        let measured: Vec<Result<Option<Measurement>>> = plans
            .par_iter()
            .enumerate()
            .map(|(k, plan)| {
                let Some((state, rate, exposure)) = &plan.simulate else {
                    return Ok(None);
                };
                let k = k as u64;
                let data = simulate_counts(state, *rate, *exposure, 0.0, derive_seed(s.seed, 2 * k))?;
                let target = (!plan.row.background_only).then_some(&plan.row.theo_rho);
                let reconstruction =
                    reconstruct_with_errors(&data, target, s.tomography.mc_samples, derive_seed(s.seed, 2 * k + 1), &options)?;
                let total = data.total();
                Ok(Some(Measurement {
                    counts_cps: total / (9.0 * exposure),
                    counts_err: total.sqrt() / (9.0 * exposure),
                    reconstruction,
                }))
            })
            .collect();
        for (plan, m) in plans.iter_mut().zip(measured) {
            let detector = plan.row.detector.clone();
            plan.row.measured = m.map_err(|e| e.with_context(format!("detector {detector}"))).map_err(ctx)?;
        }
    }

    let (comb_spacing_ghz, comb_spacing_nm) = if n >= 2 {
        let first = &pipe.comb[0];
        let last = &pipe.comb[n - 1];
        let per = (n - 1) as f64;
        let ghz = (last.center_omega - first.center_omega).abs() / (2.0 * PI) / 1e9 / per;
        let nm = (omega_to_wavelength(last.center_omega).map_err(ctx)?
            - omega_to_wavelength(first.center_omega).map_err(ctx)?)
        .abs()
            * 1e9
            / per;
        (Some(ghz), Some(nm))
    } else {
        (None, None)
    };

    Ok(DemuxReport {
        prep: label,
        scenario: s.clone(),
        fit: pipe.fit,
        modes: pipe.modes,
        escort_delay: pipe.escort_delay,
        comb_spacing_ghz,
        comb_spacing_nm,
        rows: plans.into_iter().map(|p| p.row).collect(),
    })
}
