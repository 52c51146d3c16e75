//! Unit conversions and the Gaussian chirped-pulse representation.
//!
//! A pulse is described by its complex spectral amplitude
//!
//! ```text
//! f(ω) ∝ exp(-(ω-ω0)²/(4σ²) + iA(ω-ω0)²) · exp(iωτ)
//! ```
//!
//! so the intensity `|f|²` is a Gaussian with RMS width exactly `σ`. All
//! frequencies are angular (rad/s), all delays in seconds, the chirp `A` in s².

use std::f64::consts::{LN_2, PI};
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-width of the band a grid must cover, in units of the pulse RMS width.
pub const COVERAGE_HALF_WIDTHS: f64 = 4.0;

/// FWHM / RMS ratio of a Gaussian intensity profile, `2√(2 ln 2)`.
pub fn fwhm_per_rms() -> f64 {
    2.0 * (2.0 * LN_2).sqrt()
}

/// Vacuum wavelength (m) to angular frequency (rad/s).
pub fn wavelength_to_omega(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("wavelength must be positive, got {lambda}")));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / lambda)
}

/// Angular frequency (rad/s) to vacuum wavelength (m).
pub fn omega_to_wavelength(omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("angular frequency must be positive, got {omega}")));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / omega)
}

/// Converts a filter FWHM given in wavelength into the RMS width of the
/// intensity spectrum in angular frequency.
///
/// `Δν = c·Δλ/λ0²`, then `σ = 2π·Δν / (2√(2 ln 2))`.
pub fn fwhm_wavelength_to_rms_omega(lambda0: f64, fwhm_lambda: f64) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(Error::Domain(format!("centre wavelength must be positive, got {lambda0}")));
    }
    if !(fwhm_lambda > 0.0) || fwhm_lambda >= lambda0 {
        return Err(Error::Domain(format!(
            "bandwidth must satisfy 0 < fwhm < lambda0, got fwhm={fwhm_lambda}, lambda0={lambda0}"
        )));
    }
    let fwhm_hz = SPEED_OF_LIGHT * fwhm_lambda / (lambda0 * lambda0);
    Ok(2.0 * PI * fwhm_hz / fwhm_per_rms())
}

/// Inverse of [`fwhm_wavelength_to_rms_omega`].
pub fn rms_omega_to_fwhm_wavelength(lambda0: f64, sigma: f64) -> Result<f64> {
    if !(lambda0 > 0.0) || !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "centre wavelength and width must be positive, got lambda0={lambda0}, sigma={sigma}"
        )));
    }
    let fwhm_hz = sigma * fwhm_per_rms() / (2.0 * PI);
    Ok(fwhm_hz * lambda0 * lambda0 / SPEED_OF_LIGHT)
}

/// A Gaussian pulse with quadratic spectral phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianChirpedPulse {
    /// Centre angular frequency, rad/s.
    pub omega0: f64,
    /// RMS width of the intensity spectrum, rad/s.
    pub sigma: f64,
    /// Chirp parameter `A = ½ d²φ/dω²`, s². Signed.
    pub chirp: f64,
    /// Delay relative to the train clock, s.
    pub tau: f64,
    /// Amplitude weight.
    pub amp: f64,
}

impl GaussianChirpedPulse {
    pub fn new(omega0: f64, sigma: f64, chirp: f64, tau: f64, amp: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("pulse RMS width must be positive, got {sigma}")));
        }
        if !(amp >= 0.0) {
            return Err(Error::Domain(format!("pulse amplitude must be non-negative, got {amp}")));
        }
        if !(omega0 > 0.0) || !chirp.is_finite() || !tau.is_finite() {
            return Err(Error::Domain(format!(
                "pulse parameters must be finite with positive centre, got omega0={omega0}, A={chirp}, tau={tau}"
            )));
        }
        Ok(Self { omega0, sigma, chirp, tau, amp })
    }

    /// Unit-amplitude, undelayed pulse built from a filter specification.
    pub fn from_filter(lambda0: f64, fwhm_lambda: f64, chirp: f64) -> Result<Self> {
        let omega0 = wavelength_to_omega(lambda0)?;
        let sigma = fwhm_wavelength_to_rms_omega(lambda0, fwhm_lambda)?;
        Self::new(omega0, sigma, chirp, 0.0, 1.0)
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_chirp(mut self, chirp: f64) -> Self {
        self.chirp = chirp;
        self
    }

    /// Analytic spectral amplitude at `omega`, unit-normalized and scaled by `amp`.
    pub fn amplitude_at(&self, omega: f64) -> Complex64 {
        let d = omega - self.omega0;
        let norm = (2.0 * PI * self.sigma * self.sigma).powf(-0.25);
        let envelope = (-d * d / (4.0 * self.sigma * self.sigma)).exp();
        let phase = self.chirp * d * d + omega * self.tau;
        Complex64::from_polar(self.amp * norm * envelope, phase)
    }

    /// Band `[ω0 - kσ, ω0 + kσ]` a grid must contain, `k` = [`COVERAGE_HALF_WIDTHS`].
    pub fn required_band(&self) -> (f64, f64) {
        let half = COVERAGE_HALF_WIDTHS * self.sigma;
        (self.omega0 - half, self.omega0 + half)
    }
}

/// Uniform sampling of an angular-frequency interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 points, got {n_points}")));
        }
        if !(omega_max > omega_min) {
            return Err(Error::Domain(format!(
                "grid bounds must be increasing, got [{omega_min}, {omega_max}]"
            )));
        }
        Ok(Self { omega_min, omega_max, n_points })
    }

    /// Grid of `n_points` centred on `centre` spanning `±half_span`.
    pub fn centred(centre: f64, half_span: f64, n_points: usize) -> Result<Self> {
        Self::new(centre - half_span, centre + half_span, n_points)
    }

    /// Grid centred on `centre` with a prescribed step, covering at least `±half_span`.
    pub fn with_step(centre: f64, half_span: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Domain(format!("grid step must be positive, got {step}")));
        }
        let half_points = (half_span / step).ceil() as usize;
        let n_points = 2 * half_points + 1;
        let half = half_points as f64 * step;
        Self::new(centre - half, centre + half, n_points)
    }

    pub fn step(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.n_points - 1) as f64
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.omega_min + i as f64 * self.step()
    }
}

/// Complex spectral amplitudes on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    spec: GridSpec,
    values: Vec<Complex64>,
}

/// Intensity moments of a sampled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    /// `∫|f|² dω`.
    pub power: f64,
    /// Intensity-weighted mean frequency.
    pub centre: f64,
    /// Intensity RMS width.
    pub rms: f64,
}

impl SpectrumGrid {
    pub fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.n_points {
            return Err(Error::Contract(format!(
                "grid has {} points but {} values were given",
                spec.n_points,
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn omega_min(&self) -> f64 {
        self.spec.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.spec.omega_max
    }

    pub fn n_points(&self) -> usize {
        self.spec.n_points
    }

    pub fn step(&self) -> f64 {
        self.spec.step()
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.spec.n_points).map(move |i| self.spec.omega(i))
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.norm_sqr())
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.spec.n_points {
            0.5
        } else {
            1.0
        }
    }

    /// Trapezoidal intensity moments. The centre is accumulated relative to
    /// the grid midpoint so optical carrier frequencies do not swamp the sum.
    pub fn moments(&self) -> SpectralMoments {
        let step = self.step();
        let mid = 0.5 * (self.spec.omega_min + self.spec.omega_max);
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (i, v) in self.values.iter().enumerate() {
            let w = self.trapezoid_weight(i) * v.norm_sqr();
            let x = self.spec.omega(i) - mid;
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        if m0 == 0.0 {
            return SpectralMoments { power: 0.0, centre: mid, rms: 0.0 };
        }
        let mean = m1 / m0;
        let var = (m2 / m0 - mean * mean).max(0.0);
        SpectralMoments {
            power: m0 * step,
            centre: mid + mean,
            rms: var.sqrt(),
        }
    }

    /// Writes a two-column `omega_rad_s,intensity` CSV.
    pub fn write_intensity_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_two_column_csv(&mut out, self.omegas().zip(self.intensities()))?;
        Ok(())
    }
}

pub(crate) fn write_two_column_csv<W: Write>(
    out: &mut W,
    rows: impl Iterator<Item = (f64, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "omega_rad_s,intensity")?;
    for (omega, intensity) in rows {
        writeln!(out, "{omega:.9e},{intensity:.9e}")?;
    }
    out.flush()
}

/// Samples a pulse onto a grid, including its chirp phase and delay phase,
/// normalized so the trapezoidal `∫|f|² dω` on the grid is one. `amp` is not
/// applied; callers that combine pulses scale the result themselves.
pub fn sample_pulse(pulse: &GaussianChirpedPulse, spec: &GridSpec) -> Result<SpectrumGrid> {
    let (need_min, need_max) = pulse.required_band();
    if spec.omega_min > need_min || spec.omega_max < need_max {
        return Err(Error::Coverage {
            pulse: format!("omega0={:.6e} sigma={:.3e}", pulse.omega0, pulse.sigma),
            need_min,
            need_max,
            have_min: spec.omega_min,
            have_max: spec.omega_max,
        });
    }
    let unit = GaussianChirpedPulse { amp: 1.0, ..*pulse };
    let values: Vec<Complex64> = (0..spec.n_points).map(|i| unit.amplitude_at(spec.omega(i))).collect();
    let mut grid = SpectrumGrid::from_values(*spec, values)?;
    let power = grid.moments().power;
    if !(power > 0.0) {
        return Err(Error::DegenerateData(
            "sampled pulse has zero power on the grid".to_string(),
        ));
    }
    let scale = power.sqrt().recip();
    for v in &mut grid.values {
        *v *= scale;
    }
    Ok(grid)
}
