//! Time-to-frequency conversion by sum-frequency generation between a chirped
//! single photon and an oppositely chirped escort pulse.
//!
//! For Gaussian inputs with chirps `A` and `-A` and relative delay `τ` the
//! generated intensity spectrum is Gaussian with
//!
//! ```text
//! centre  = ω0s + ω0e - 8Aσs²σe²τ / (1 + 16A²σs²σe²)
//! width²  = (σs² + σe²) / (1 + 16A²σs²σe²)
//! decay   = exp(-2σs²σe²τ² / ((σs² + σe²)(1 + 16A²σs²σe²)))
//! peak    = 2σsσe/(σs² + σe²) · decay
//! ```
//!
//! [`sfg_analytic`] evaluates these exactly; [`sfg_numeric`] evaluates the
//! defining convolution by quadrature and serves as an independent check.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sample_pulse, GaussianChirpedPulse, GridSpec, SpectrumGrid};

/// Largest spectral-phase change allowed between neighbouring grid points.
pub const MAX_PHASE_STEP: f64 = PI / 16.0;

/// Samples below this fraction of the peak amplitude are ignored when
/// checking phase resolution.
const PHASE_CHECK_FLOOR: f64 = 1e-4;

/// One line of the generated frequency comb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombChannel {
    pub mode_index: usize,
    /// Signal delay relative to the escort, s.
    pub tau: f64,
    /// Centre of the generated intensity spectrum, rad/s.
    pub center_omega: f64,
    /// RMS width of the generated intensity spectrum, rad/s.
    pub rms_width: f64,
    /// Intensity decay factor relative to zero delay; 1 only at `τ = 0`.
    pub rel_efficiency: f64,
    /// Peak of `|f_g|²`.
    pub peak_intensity: f64,
}

impl CombChannel {
    /// `|f_g(ω)|²` of this channel.
    pub fn intensity_at(&self, omega: f64) -> f64 {
        let d = (omega - self.center_omega) / self.rms_width;
        self.peak_intensity * (-0.5 * d * d).exp()
    }

    /// `∫|f_g|² dω`.
    pub fn total_power(&self) -> f64 {
        self.peak_intensity * (2.0 * PI).sqrt() * self.rms_width
    }
}

fn check_opposite_chirps(signal: &GaussianChirpedPulse, escort: &GaussianChirpedPulse) -> Result<()> {
    let scale = signal.chirp.abs().max(escort.chirp.abs());
    if (signal.chirp + escort.chirp).abs() > 1e-12 * scale {
        return Err(Error::Contract(format!(
            "signal and escort chirps must be equal and opposite, got {:e} and {:e}",
            signal.chirp, escort.chirp
        )));
    }
    Ok(())
}

/// Exact generated spectrum for oppositely chirped Gaussian inputs.
pub fn sfg_analytic(signal: &GaussianChirpedPulse, escort: &GaussianChirpedPulse) -> Result<CombChannel> {
    check_opposite_chirps(signal, escort)?;
    let a = signal.chirp;
    let (ss, se) = (signal.sigma * signal.sigma, escort.sigma * escort.sigma);
    let sum = ss + se;
    let k = 16.0 * a * a * ss * se;
    let tau = signal.tau - escort.tau;
    let rel_efficiency = (-2.0 * ss * se * tau * tau / (sum * (1.0 + k))).exp();
    let amp2 = (signal.amp * escort.amp).powi(2);
    Ok(CombChannel {
        mode_index: 0,
        tau,
        center_omega: signal.omega0 + escort.omega0 - 8.0 * a * ss * se * tau / (1.0 + k),
        rms_width: (sum / (1.0 + k)).sqrt(),
        rel_efficiency,
        peak_intensity: amp2 * 2.0 * signal.sigma * escort.sigma / sum * rel_efficiency,
    })
}

/// Large-chirp approximation (`Aσ² ≫ 1`): shift `-τ/(2A)`, width
/// `(1/4|A|)·√(1/σe² + 1/σs²)`, decay `exp(-τ²/(8A²(σs²+σe²)))`.
pub fn sfg_large_chirp(signal: &GaussianChirpedPulse, escort: &GaussianChirpedPulse) -> Result<CombChannel> {
    check_opposite_chirps(signal, escort)?;
    let a = signal.chirp;
    if a == 0.0 {
        return Err(Error::Domain("large-chirp approximation needs A != 0".to_string()));
    }
    let (ss, se) = (signal.sigma * signal.sigma, escort.sigma * escort.sigma);
    let sum = ss + se;
    let tau = signal.tau - escort.tau;
    let rel_efficiency = (-tau * tau / (8.0 * a * a * sum)).exp();
    let amp2 = (signal.amp * escort.amp).powi(2);
    Ok(CombChannel {
        mode_index: 0,
        tau,
        center_omega: signal.omega0 + escort.omega0 - tau / (2.0 * a),
        rms_width: (1.0 / se + 1.0 / ss).sqrt() / (4.0 * a.abs()),
        rel_efficiency,
        peak_intensity: amp2 * 2.0 * signal.sigma * escort.sigma / sum * rel_efficiency,
    })
}

/// Comb channels for a signal pulse at each of `taus` (relative to the escort).
pub fn comb_channels(
    signal: &GaussianChirpedPulse,
    escort: &GaussianChirpedPulse,
    taus: &[f64],
) -> Result<Vec<CombChannel>> {
    taus.iter()
        .enumerate()
        .map(|(i, &tau)| {
            let s = signal.with_tau(escort.tau + tau);
            sfg_analytic(&s, escort).map(|c| CombChannel { mode_index: i, ..c })
        })
        .collect()
}

/// Largest phase change between adjacent significant samples.
fn max_phase_step(grid: &SpectrumGrid) -> f64 {
    let values = grid.values();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = PHASE_CHECK_FLOOR * peak;
    values
        .windows(2)
        .filter(|w| w[0].norm() > floor && w[1].norm() > floor)
        .map(|w| (w[1] * w[0].conj()).arg().abs())
        .fold(0.0, f64::max)
}

fn check_resolution(name: &str, grid: &SpectrumGrid) -> Result<()> {
    let step = max_phase_step(grid);
    if step > MAX_PHASE_STEP {
        let required_points = (grid.n_points() as f64 * step / MAX_PHASE_STEP).ceil() as usize;
        return Err(Error::Resolution { grid: name.to_string(), phase_step: step, required_points });
    }
    Ok(())
}

/// Generated spectrum `f_g(ω_g) = ∫ dω_s f_s(ω_s) α(ω_g - ω_s)` by
/// trapezoidal quadrature. The signal grid already carries its delay phase.
///
/// Both grids must share one step; the output grid starts at the sum of the
/// input lower bounds with the same step and `n_s + n_e - 1` points. The
/// result is not renormalized, so its power carries the conversion efficiency.
pub fn sfg_numeric(signal_grid: &SpectrumGrid, escort_grid: &SpectrumGrid) -> Result<SpectrumGrid> {
    let step = signal_grid.step();
    if ((escort_grid.step() - step) / step).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "signal and escort grids must share a step, got {:e} and {:e}",
            step,
            escort_grid.step()
        )));
    }
    check_resolution("signal", signal_grid)?;
    check_resolution("escort", escort_grid)?;

    let (ns, ne) = (signal_grid.n_points(), escort_grid.n_points());
    let n_out = ns + ne - 1;
    let mut a = padded_with_end_weights(signal_grid.values(), n_out);
    let mut b = padded_with_end_weights(escort_grid.values(), n_out);

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n_out);
    let inverse = planner.plan_fft_inverse(n_out);
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    inverse.process(&mut a);
    // rustfft leaves the inverse unscaled
    let scale = step / n_out as f64;
    for v in &mut a {
        *v *= scale;
    }

    let omega_min = signal_grid.omega_min() + escort_grid.omega_min();
    let spec = GridSpec::new(omega_min, omega_min + step * (n_out - 1) as f64, n_out)?;
    SpectrumGrid::from_values(spec, a)
}

fn padded_with_end_weights(values: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    out[..values.len()].copy_from_slice(values);
    out[0] *= 0.5;
    out[values.len() - 1] *= 0.5;
    out
}

/// Grid step that keeps the chirp and delay phase of `pulse` below
/// [`MAX_PHASE_STEP`] per step out to `half_widths` RMS widths.
pub fn resolving_step(pulse: &GaussianChirpedPulse, half_widths: f64) -> f64 {
    let slope = 2.0 * pulse.chirp.abs() * half_widths * pulse.sigma + pulse.tau.abs();
    let coarse = pulse.sigma / 8.0;
    if slope == 0.0 {
        coarse
    } else {
        // keep a margin below the limit
        (0.8 * MAX_PHASE_STEP / slope).min(coarse)
    }
}

/// Samples both pulses on a common, phase-resolving step covering
/// `±half_widths` RMS widths each and returns the numeric generated spectrum.
pub fn sfg_numeric_for(
    signal: &GaussianChirpedPulse,
    escort: &GaussianChirpedPulse,
    half_widths: f64,
) -> Result<SpectrumGrid> {
    let step = resolving_step(signal, half_widths).min(resolving_step(escort, half_widths));
    let sg = sample_pulse(signal, &GridSpec::with_step(signal.omega0, half_widths * signal.sigma, step)?)?;
    let eg = sample_pulse(escort, &GridSpec::with_step(escort.omega0, half_widths * escort.sigma, step)?)?;
    sfg_numeric(&sg, &eg)
}

fn check_widths(sigma_s: f64, sigma_e: f64) -> Result<()> {
    if !(sigma_s > 0.0) || !(sigma_e > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidths must be positive, got sigma_s={sigma_s}, sigma_e={sigma_e}"
        )));
    }
    Ok(())
}

/// Relative signal of mode `j` when detecting exactly at the comb line of
/// mode `m` (large-chirp form):
///
/// `exp[-2σe²σs²(τj-τm)²/(σe²+σs²) - τj²/(8A²(σe²+σs²))]`.
///
/// For `j = m` this is the mode's own efficiency factor.
pub fn crosstalk_ratio(tau_j: f64, tau_m: f64, sigma_s: f64, sigma_e: f64, chirp: f64) -> Result<f64> {
    check_widths(sigma_s, sigma_e)?;
    if chirp == 0.0 {
        return Err(Error::Domain("crosstalk needs a non-zero chirp".to_string()));
    }
    let (ss, se) = (sigma_s * sigma_s, sigma_e * sigma_e);
    let sum = ss + se;
    let d = tau_j - tau_m;
    Ok((-2.0 * se * ss * d * d / sum - tau_j * tau_j / (8.0 * chirp * chirp * sum)).exp())
}

/// Field-amplitude leakage of a neighbour separated by `dtau`, relative to its
/// own peak: the square root of the peak-normalized [`crosstalk_ratio`].
///
/// This is the quantity the negligibility threshold is defined on: at the
/// minimum separation of [`mode_budget`] it equals `e⁻²`.
pub fn leakage_amplitude(dtau: f64, sigma_s: f64, sigma_e: f64) -> Result<f64> {
    check_widths(sigma_s, sigma_e)?;
    let (ss, se) = (sigma_s * sigma_s, sigma_e * sigma_e);
    Ok((-ss * se * dtau * dtau / (ss + se)).exp())
}

/// `X[j][m] = crosstalk_ratio(τ_j, τ_m)` for delays relative to the escort.
pub fn crosstalk_matrix(taus: &[f64], sigma_s: f64, sigma_e: f64, chirp: f64) -> Result<Vec<Vec<f64>>> {
    taus.iter()
        .map(|&tj| taus.iter().map(|&tm| crosstalk_ratio(tj, tm, sigma_s, sigma_e, chirp)).collect())
        .collect()
}

/// Feasible pulse-separation window and the resulting channel count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBudget {
    /// Minimum separation of adjacent modes, s.
    pub dtau_min: f64,
    /// Maximum separation of any mode from the escort, s.
    pub dtau_max: f64,
    pub max_modes: u64,
}

/// `Δτ_min = √2·√(σe²+σs²)/(σeσs)`, `Δτ_max = 2√2·|A|·√(σe²+σs²)`.
pub fn mode_budget(sigma_s: f64, sigma_e: f64, chirp: f64) -> Result<ModeBudget> {
    check_widths(sigma_s, sigma_e)?;
    let root = (sigma_s * sigma_s + sigma_e * sigma_e).sqrt();
    let dtau_min = SQRT_2 * root / (sigma_s * sigma_e);
    let dtau_max = 2.0 * SQRT_2 * chirp.abs() * root;
    Ok(ModeBudget { dtau_min, dtau_max, max_modes: (dtau_max / dtau_min).floor() as u64 })
}
