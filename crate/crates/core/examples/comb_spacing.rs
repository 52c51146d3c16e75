//! Frequency comb produced by upconverting a three-pulse train.
//!
//! A signal photon chirped by `A` meets an escort chirped by `-A`; a delay
//! `τ` between them moves the sum-frequency line by about `-τ/(2A)`. The
//! example prints the three comb lines for pulses at `-T, 0, +T` around the
//! escort, with their widths and conversion efficiencies.
//!
//! ```bash
//! cargo run --example comb_spacing
//! ```

use std::f64::consts::PI;

use chirpdemux::spectral::{fwhm_per_rms, omega_to_wavelength, GaussianChirpedPulse};
use chirpdemux::upconvert::{comb_channels, sfg_large_chirp};

const CHIRP: f64 = 696e-27;
const DELAY: f64 = 2.69e-12;

fn main() -> chirpdemux::Result<()> {
    let signal = GaussianChirpedPulse::from_filter(809.06e-9, 3.9e-9, CHIRP)?;
    let escort = GaussianChirpedPulse::from_filter(786.2e-9, 6.3e-9, -CHIRP)?;
    let ghz = |w: f64| w / (2.0 * PI) / 1e9;

    println!("signal sigma = {:.4e} rad/s, escort sigma = {:.4e} rad/s", signal.sigma, escort.sigma);
    let lines = comb_channels(&signal, &escort, &[-DELAY, 0.0, DELAY])?;
    println!("\n mode   tau (ps)   centre (nm)   offset (GHz)   FWHM (GHz)   efficiency");
    for (label, line) in ["A", "B", "C"].iter().zip(&lines) {
        println!(
            "  {label}    {:+6.2}     {:.4}      {:+8.2}       {:6.2}       {:.5}",
            line.tau * 1e12,
            omega_to_wavelength(line.center_omega)? * 1e9,
            ghz(line.center_omega - signal.omega0 - escort.omega0),
            ghz(line.rms_width) * fwhm_per_rms(),
            line.rel_efficiency,
        );
    }

    let spacing = lines[1].center_omega - lines[0].center_omega;
    let nm = omega_to_wavelength(lines[0].center_omega)? - omega_to_wavelength(lines[1].center_omega)?;
    println!("\nspacing: {:.2} GHz = {:.4} nm", ghz(spacing.abs()), nm.abs() * 1e9);

    // The large-chirp closed form is the familiar time-to-frequency map.
    let approx = sfg_large_chirp(&signal.with_tau(DELAY), &escort)?;
    println!(
        "large-chirp shift tau/(2A): {:.2} GHz (exact {:.2} GHz)",
        ghz(DELAY / (2.0 * CHIRP)),
        ghz(lines[1].center_omega - approx.center_omega)
    );
    let bound = 1.0 / (2.0 * 2f64.sqrt() * CHIRP * signal.sigma);
    println!(
        "compressed RMS width {:.3e} rad/s vs bound 1/(2 sqrt2 A sigma_s) = {:.3e} rad/s",
        lines[1].rms_width, bound
    );
    Ok(())
}
