//! How many temporal modes one chirp setting can separate.
//!
//! Adjacent modes must be far enough apart for their comb lines not to
//! overlap (`Δτ_min`), and no mode may sit so far from the escort that its
//! conversion efficiency collapses (`Δτ_max`). The example prints the window
//! for the default optics, the crosstalk at the experimental spacing, and how
//! the budget scales with chirp.
//!
//! ```bash
//! cargo run --example mode_budget
//! ```

use chirpdemux::spectral::fwhm_wavelength_to_rms_omega;
use chirpdemux::upconvert::{crosstalk_matrix, crosstalk_ratio, leakage_amplitude, mode_budget};

fn main() -> chirpdemux::Result<()> {
    let sigma_s = fwhm_wavelength_to_rms_omega(809.06e-9, 3.9e-9)?;
    let sigma_e = fwhm_wavelength_to_rms_omega(786.2e-9, 6.3e-9)?;
    let chirp = 696e-27;
    let delay = 2.69e-12;

    let budget = mode_budget(sigma_s, sigma_e, chirp)?;
    println!("dtau_min  = {:.3} ps", budget.dtau_min * 1e12);
    println!("dtau_max  = {:.2} ps", budget.dtau_max * 1e12);
    println!("max_modes = {}", budget.max_modes);

    let leak = leakage_amplitude(budget.dtau_min, sigma_s, sigma_e)?;
    println!("\nneighbour leakage at dtau_min: {leak:.6} (e^-2 = {:.6})", (-2f64).exp());

    let own = crosstalk_ratio(delay, delay, sigma_s, sigma_e, chirp)?;
    let neighbour = crosstalk_ratio(0.0, delay, sigma_s, sigma_e, chirp)?;
    println!("at the experimental spacing of {:.2} ps:", delay * 1e12);
    println!("  own-line signal   {own:.5}");
    println!("  neighbour leakage {neighbour:.3e} (ln = {:.1})", neighbour.ln());

    println!("\ncrosstalk matrix X[j][m] for modes at -T, 0, +T:");
    for row in crosstalk_matrix(&[-delay, 0.0, delay], sigma_s, sigma_e, chirp)? {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:10.3e}")).collect();
        println!("  {}", cells.join(" "));
    }

    println!("\nchirp (fs^2)   dtau_max (ps)   modes");
    for scale in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let b = mode_budget(sigma_s, sigma_e, scale * chirp)?;
        println!("  {:>9.0}      {:7.2}      {:4}", scale * chirp * 1e30, b.dtau_max * 1e12, b.max_modes);
    }
    Ok(())
}
