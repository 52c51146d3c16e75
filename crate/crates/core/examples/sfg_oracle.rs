//! Numerical sum-frequency generation as an independent check.
//!
//! Both pulses are sampled on a common grid fine enough to resolve their
//! chirp phase, and the generated spectrum is their convolution, computed by
//! FFT. Its moments are compared with the exact Gaussian result. A grid that
//! is too coarse is rejected with the number of points it would need.
//!
//! ```bash
//! cargo run --example sfg_oracle
//! ```

use chirpdemux::spectral::{sample_pulse, GaussianChirpedPulse, GridSpec};
use chirpdemux::upconvert::{sfg_analytic, sfg_numeric, sfg_numeric_for};
use chirpdemux::Error;

fn main() -> chirpdemux::Result<()> {
    let chirp = 696e-27;
    let signal = GaussianChirpedPulse::from_filter(809.06e-9, 3.9e-9, chirp)?;
    let escort = GaussianChirpedPulse::from_filter(786.2e-9, 6.3e-9, -chirp)?;

    println!("tau (ps)   centre offset: exact / numeric (GHz)   RMS ratio   power ratio   points");
    for tau_ps in [0.0, 1.0, 2.69, 5.38, 10.0] {
        let s = signal.with_tau(tau_ps * 1e-12);
        let exact = sfg_analytic(&s, &escort)?;
        let grid = sfg_numeric_for(&s, &escort, 6.0)?;
        let m = grid.moments();
        let base = s.omega0 + escort.omega0;
        let ghz = |w: f64| (w - base) / (2.0 * std::f64::consts::PI) / 1e9;
        println!(
            "{tau_ps:7.2}      {:+9.3} / {:+9.3}               {:.6}    {:.6}    {}",
            ghz(exact.center_omega),
            ghz(m.centre),
            m.rms / exact.rms_width,
            m.power / exact.total_power(),
            grid.n_points()
        );
    }

    // The signal's ±5σ band in 2001 points is too coarse to follow the
    // chirp phase at the band edges.
    let step = 10.0 * signal.sigma / 2000.0;
    let sg = sample_pulse(&signal, &GridSpec::with_step(signal.omega0, 5.0 * signal.sigma, step)?)?;
    let eg = sample_pulse(&escort, &GridSpec::with_step(escort.omega0, 5.0 * escort.sigma, step)?);
    match eg.and_then(|eg| sfg_numeric(&sg, &eg)) {
        Err(Error::Resolution { grid, phase_step, required_points }) => {
            println!("\ncoarse {grid} grid rejected: phase step {phase_step:.3} rad, needs {required_points} points")
        }
        Err(e) => println!("\ncoarse grid rejected: {e}"),
        Ok(_) => println!("\ncoarse grid unexpectedly accepted"),
    }
    Ok(())
}
