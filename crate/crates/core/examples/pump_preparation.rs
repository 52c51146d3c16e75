//! Shaping the pump into a polarization-coded pulse train.
//!
//! Two birefringent crystals split one pump pulse into up to three copies at
//! delays `0, T, 2T`; wave plates then set each copy's polarization, and each
//! copy drives the pair source into `β|HH⟩ + α|VV⟩`. The example runs all
//! eight preset preparations and compares the resulting pair states with the
//! tabulated targets.
//!
//! ```bash
//! cargo run --example pump_preparation
//! ```

use chirpdemux::demuxsim::{build_pipeline, PrepId, Scenario};
use chirpdemux::pumpprep::{prepare_pump, JonesVector, OpticalElement};
use chirpdemux::qmetrics::{fidelity_pure, StateVector, TwoQubitState};

fn name(psi: &StateVector) -> String {
    let known = [
        ("HH", StateVector::hh()),
        ("VV", StateVector::vv()),
        ("Phi+", StateVector::phi_plus()),
        ("Phi-", StateVector::phi_minus()),
        ("Phi+i", StateVector::phi_plus_i()),
        ("Phi-i", StateVector::phi_minus_i()),
    ];
    let rho = TwoQubitState::from_pure(psi).expect("normalized pair state");
    known
        .iter()
        .find(|(_, k)| fidelity_pure(&rho, k) > 1.0 - 1e-9)
        .map_or_else(|| "other".to_string(), |(n, _)| n.to_string())
}

fn main() -> chirpdemux::Result<()> {
    // One diagonal pulse through a crystal at 0: H and V copies, T apart.
    let t = 2.69e-12;
    let train = prepare_pump(&[OpticalElement::crystal(t, 0.0)], JonesVector::diagonal())?;
    println!("diagonal pulse through one crystal:");
    for e in train.entries() {
        println!("  tau = {:.2} ps  |H|^2 = {:.2}  |V|^2 = {:.2}", e.tau * 1e12, e.jones.h.norm_sqr(), e.jones.v.norm_sqr());
    }

    println!("\nprep  fitted                 A          B          C      | tabulated");
    for prep in PrepId::ALL {
        let pipe = build_pipeline(&Scenario::preset(prep))?;
        let mut cells = vec!["-".to_string(); pipe.slots.len()];
        for mode in &pipe.modes {
            let k = pipe.slots.iter().position(|s| (s - mode.tau).abs() < 1e-18).expect("mode in a slot");
            cells[k] = format!("{}({:.2})", name(&mode.pair_state), mode.weight);
        }
        let targets: Vec<String> = prep.targets().iter().map(|t| t.as_ref().map_or("-".into(), name)).collect();
        let fit = pipe.fit.map_or(String::new(), |f| format!("{:?}={:+.4}", f.parameter, f.fitted));
        println!("{:>4}  {:<20} {:>10} {:>10} {:>10}  | {}", prep, fit, cells[0], cells[1], cells[2], targets.join(" "));
    }
    Ok(())
}
