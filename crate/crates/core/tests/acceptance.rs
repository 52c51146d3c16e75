//! Acceptance criteria. Runs as a plain binary so that every criterion prints
//! one PASS/FAIL line; the process fails if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chirpdemux::demuxsim::{build_pipeline, run_scenario, DemuxReport, PrepId, Scenario};
use chirpdemux::pumpprep::{prepare_pump, JonesVector, OpticalElement};
use chirpdemux::qmetrics::{fidelity, random, TwoQubitState};
use chirpdemux::spectral::{fwhm_per_rms, omega_to_wavelength, GaussianChirpedPulse};
use chirpdemux::tomography::{
    expected_counts, mle_reconstruct, monte_carlo_uncertainty, objective, objective_gradient, params_from_matrix,
    simulate_counts, LikelihoodModel, MleOptions, N_PARAMS,
};
use chirpdemux::upconvert::{
    comb_channels, crosstalk_ratio, leakage_amplitude, mode_budget, sfg_analytic, sfg_numeric_for,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHIRP: f64 = 696e-27;
const DELAY: f64 = 2.69e-12;

// Pinned tolerances.
const AC1_SHIFT_GHZ: f64 = 307.0;
const AC1_SHIFT_REL: f64 = 0.01;
const AC1_SHIFT_NM: f64 = 0.163;
const AC1_SHIFT_NM_TOL: f64 = 0.005;
const AC1_CENTRE_NM: f64 = 398.8;
const AC1_CENTRE_NM_TOL: f64 = 0.5;
const AC2_DTAU_MIN_PS: (f64, f64) = (0.30, 0.45);
const AC2_DTAU_MAX_PS: (f64, f64) = (17.0, 20.0);
const AC2_MODES: (u64, u64) = (40, 60);
const AC3_FWHM_GHZ: f64 = 33.0;
const AC3_FWHM_REL: f64 = 0.05;
const AC4_SETS: usize = 50;
const AC4_REL: f64 = 1e-3;
const AC4_HALF_WIDTHS: f64 = 6.0;
const AC5_TOL: f64 = 1e-9;
const AC6_TANGLE_IN: f64 = 1e-10;
const AC6_TANGLE_CHANNEL: f64 = 1e-8;
const AC6_FIDELITY: f64 = 1e-8;
const AC7_ADJACENT: f64 = 1e-20;
const AC7_AMPLITUDE_TOL: f64 = 1e-6;
const AC8_STATES: usize = 100;
const AC8_FIDELITY: f64 = 0.9999;
const AC8_REFERENCE_SPREAD: f64 = 0.011;
const AC8_SPREAD_FACTOR: f64 = 3.0;
const AC8_MC_SAMPLES: usize = 200;
const AC9_POINTS: usize = 20;
const AC9_REL: f64 = 1e-5;
const AC10_NORM: f64 = 1e-12;
const AC11_WEIGHT: f64 = 1e-12;
const AC11_RATE_RATIO: f64 = 2.0;
const AC11_RATE_TOL: f64 = 0.05;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:.2?}, budget {budget:?}"))
}

fn reference_pulses() -> (GaussianChirpedPulse, GaussianChirpedPulse) {
    let s = GaussianChirpedPulse::from_filter(809.06e-9, 3.9e-9, CHIRP).unwrap();
    let e = GaussianChirpedPulse::from_filter(786.2e-9, 6.3e-9, -CHIRP).unwrap();
    (s, e)
}

fn ghz(w: f64) -> f64 {
    w / (2.0 * PI) / 1e9
}

fn ac1_comb_spacing() -> Outcome {
    let start = Instant::now();
    let (s, e) = reference_pulses();
    let lines = comb_channels(&s, &e, &[0.0, DELAY]).map_err(|e| e.to_string())?;
    let shift = ghz((lines[0].center_omega - lines[1].center_omega).abs());
    let l0 = omega_to_wavelength(lines[0].center_omega).unwrap() * 1e9;
    let l1 = omega_to_wavelength(lines[1].center_omega).unwrap() * 1e9;
    let nm = (l1 - l0).abs();
    ensure((shift - AC1_SHIFT_GHZ).abs() <= AC1_SHIFT_REL * AC1_SHIFT_GHZ, || format!("shift {shift:.3} GHz"))?;
    ensure((nm - AC1_SHIFT_NM).abs() <= AC1_SHIFT_NM_TOL, || format!("shift {nm:.5} nm"))?;
    ensure((l0 - AC1_CENTRE_NM).abs() <= AC1_CENTRE_NM_TOL, || format!("line at {l0:.3} nm"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("{shift:.2} GHz, {nm:.4} nm near {l0:.2} nm"))
}

fn ac2_mode_budget() -> Outcome {
    let start = Instant::now();
    let (s, e) = reference_pulses();
    let b = mode_budget(s.sigma, e.sigma, CHIRP).map_err(|e| e.to_string())?;
    let (lo, hi) = (b.dtau_min * 1e12, b.dtau_max * 1e12);
    ensure((AC2_DTAU_MIN_PS.0..=AC2_DTAU_MIN_PS.1).contains(&lo), || format!("dtau_min {lo:.4} ps"))?;
    ensure((AC2_DTAU_MAX_PS.0..=AC2_DTAU_MAX_PS.1).contains(&hi), || format!("dtau_max {hi:.3} ps"))?;
    ensure((AC2_MODES.0..=AC2_MODES.1).contains(&b.max_modes), || format!("max_modes {}", b.max_modes))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("dtau_min {lo:.3} ps, dtau_max {hi:.2} ps, {} modes", b.max_modes))
}

fn ac3_bandwidth_compression() -> Outcome {
    let start = Instant::now();
    let (s, e) = reference_pulses();
    let line = sfg_analytic(&s, &e).map_err(|e| e.to_string())?;
    let bound = 1.0 / (2.0 * 2f64.sqrt() * CHIRP * s.sigma);
    let fwhm = ghz(line.rms_width) * fwhm_per_rms();
    ensure(line.rms_width <= bound, || format!("width {:.4e} > bound {bound:.4e}", line.rms_width))?;
    ensure((fwhm - AC3_FWHM_GHZ).abs() <= AC3_FWHM_REL * AC3_FWHM_GHZ, || format!("FWHM {fwhm:.3} GHz"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("RMS {:.4e} <= {bound:.4e} rad/s, FWHM {fwhm:.2} GHz", line.rms_width))
}

fn ac4_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 3];
    for i in 0..AC4_SETS {
        let chirp = rng.gen_range(100e-27..1000e-27) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s = GaussianChirpedPulse::from_filter(rng.gen_range(780e-9..840e-9), rng.gen_range(2e-9..8e-9), chirp)
            .map_err(|e| e.to_string())?
            .with_tau(rng.gen_range(-5.0..5.0) * DELAY);
        let e = GaussianChirpedPulse::from_filter(rng.gen_range(770e-9..830e-9), rng.gen_range(2e-9..8e-9), -chirp)
            .map_err(|e| e.to_string())?;
        let exact = sfg_analytic(&s, &e).map_err(|e| e.to_string())?;
        let m = sfg_numeric_for(&s, &e, AC4_HALF_WIDTHS).map_err(|e| format!("set {i}: {e}"))?.moments();
        let errs = [
            (m.centre - exact.center_omega).abs() / exact.rms_width,
            (m.rms / exact.rms_width - 1.0).abs(),
            (m.power / exact.total_power() - 1.0).abs(),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
        ensure(errs.iter().all(|&e| e < AC4_REL), || format!("set {i}: errors {errs:?}"))?;
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "{AC4_SETS} sets, worst centre/RMS {:.1e}, RMS {:.1e}, power {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

/// Theory columns of the results table: (detector, tangle, purity).
fn tabulated_theory(prep: PrepId) -> [(&'static str, f64, f64); 4] {
    let q = 0.25;
    match prep {
        PrepId::I => [("in", 1.0, 1.0), ("A", 0.0, q), ("B", 0.0, q), ("C", 1.0, 1.0)],
        PrepId::Ii => [("in", 1.0, 1.0), ("A", 0.0, q), ("B", 1.0, 1.0), ("C", 0.0, q)],
        PrepId::Iii => [("in", 1.0, 1.0), ("A", 1.0, 1.0), ("B", 0.0, q), ("C", 0.0, q)],
        PrepId::Iv => [("in", 0.0, 0.5), ("A", 0.0, 1.0), ("B", 0.0, 1.0), ("C", 0.0, q)],
        PrepId::V => [("in", 0.0, 0.5), ("A", 0.0, 1.0), ("B", 0.0, 1.0), ("C", 0.0, q)],
        PrepId::Vi => [("in", 0.0, 0.625), ("A", 1.0, 1.0), ("B", 0.0, 1.0), ("C", 1.0, 1.0)],
        PrepId::Vii => [("in", 0.25, 0.625), ("A", 1.0, 1.0), ("B", 1.0, 1.0), ("C", 1.0, 1.0)],
        PrepId::Viii => [("in", 0.25, 0.625), ("A", 0.0, 1.0), ("B", 1.0, 1.0), ("C", 0.0, 1.0)],
    }
}

/// Cells where the tabulated theory contradicts the tabulated targets: prep
/// (v) lists tangle 0 for two maximally entangled targets.
fn known_table_conflict(prep: PrepId, detector: &str) -> Option<f64> {
    (prep == PrepId::V && (detector == "A" || detector == "B")).then_some(1.0)
}

fn noiseless(prep: PrepId) -> Result<DemuxReport, String> {
    run_scenario(&Scenario::preset(prep).noiseless()).map_err(|e| e.to_string())
}

fn ac5_table_theory() -> Outcome {
    let start = Instant::now();
    let mut cells = 0;
    let mut conflicts = Vec::new();
    for prep in PrepId::ALL {
        let report = noiseless(prep)?;
        for (det, tangle, purity) in tabulated_theory(prep) {
            let row = report.row(det).ok_or_else(|| format!("({prep}) has no row {det}"))?;
            let expected_tangle = match known_table_conflict(prep, det) {
                Some(model) => {
                    conflicts.push(format!("({prep}){det} tangle table {tangle} model {model}"));
                    model
                }
                None => tangle,
            };
            ensure((row.theo.tangle - expected_tangle).abs() < AC5_TOL, || {
                format!("({prep}) {det}: tangle {:.12} vs {expected_tangle}", row.theo.tangle)
            })?;
            ensure((row.theo.purity - purity).abs() < AC5_TOL, || {
                format!("({prep}) {det}: purity {:.12} vs {purity}", row.theo.purity)
            })?;
            cells += 2;
        }
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("{cells} cells match; logged conflict: {}", conflicts.join(", ")))
}

fn ac6_entanglement_revelation() -> Outcome {
    let v = noiseless(PrepId::V)?;
    let t_in = v.row("in").unwrap().theo.tangle;
    let t_a = v.row("A").unwrap().theo.tangle;
    let t_b = v.row("B").unwrap().theo.tangle;
    ensure(t_in.abs() <= AC6_TANGLE_IN, || format!("(v) in tangle {t_in:e}"))?;
    ensure((t_a - 1.0).abs() <= AC6_TANGLE_CHANNEL && (t_b - 1.0).abs() <= AC6_TANGLE_CHANNEL, || {
        format!("(v) channel tangles {t_a}, {t_b}")
    })?;
    let iv = noiseless(PrepId::Iv)?;
    let max_tangle = iv.rows.iter().map(|r| r.theo.tangle).fold(0.0, f64::max);
    ensure(max_tangle <= AC6_TANGLE_IN, || format!("(iv) tangle {max_tangle:e}"))?;
    let f = fidelity(&iv.row("A").unwrap().theo_rho, &iv.row("B").unwrap().theo_rho);
    ensure(f < AC6_FIDELITY, || format!("(iv) A/B fidelity {f:e}"))?;
    Ok(format!("(v) in {t_in:.1e}, A {t_a:.10}, B {t_b:.10}; (iv) max tangle {max_tangle:.1e}, F(A,B) {f:.1e}"))
}

fn ac7_crosstalk() -> Outcome {
    let (s, e) = reference_pulses();
    let adjacent = crosstalk_ratio(0.0, DELAY, s.sigma, e.sigma, CHIRP).map_err(|e| e.to_string())?;
    ensure(adjacent < AC7_ADJACENT, || format!("adjacent leakage {adjacent:e}"))?;
    let b = mode_budget(s.sigma, e.sigma, CHIRP).map_err(|e| e.to_string())?;
    let amp = leakage_amplitude(b.dtau_min, s.sigma, e.sigma).map_err(|e| e.to_string())?;
    let target = (-2f64).exp();
    ensure((amp - target).abs() <= AC7_AMPLITUDE_TOL, || format!("amplitude at dtau_min {amp}"))?;
    Ok(format!(
        "adjacent {adjacent:.3e} (ln {:.1}), amplitude at dtau_min {amp:.8} (intensity {:.3e})",
        adjacent.ln(),
        amp * amp
    ))
}

fn ac8_tomography() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 1.0;
    for i in 0..AC8_STATES {
        let rank = 1 + i % 4;
        let truth = random::density_matrix(&mut rng, rank);
        let data = expected_counts(&truth, 1e4, 1.0, 0.0).map_err(|e| e.to_string())?;
        let fit = mle_reconstruct(&data).map_err(|e| format!("state {i}: {e}"))?;
        let f = fidelity(&fit.state, &truth);
        worst = worst.min(f);
        ensure(f >= AC8_FIDELITY, || format!("state {i} (rank {rank}): fidelity {f}"))?;
    }

    let target = TwoQubitState::from_pure(&chirpdemux::qmetrics::StateVector::phi_plus()).unwrap();
    let data = simulate_counts(&target, 13.9, 360.0, 0.34, 42).map_err(|e| e.to_string())?;
    let mc = monte_carlo_uncertainty(&data, AC8_MC_SAMPLES, 42, Some(&target), &MleOptions::default())
        .map_err(|e| e.to_string())?;
    let spread = 0.5 * (mc.tangle.plus + mc.tangle.minus);
    let (lo, hi) = (AC8_REFERENCE_SPREAD / AC8_SPREAD_FACTOR, AC8_REFERENCE_SPREAD * AC8_SPREAD_FACTOR);
    ensure((lo..=hi).contains(&spread), || format!("tangle spread {spread:.4} outside [{lo:.4}, {hi:.4}]"))?;
    within_budget(start, Duration::from_secs(300))?;
    Ok(format!(
        "worst noiseless fidelity {worst:.7}; tangle {:.3} +{:.4} -{:.4} ({} samples, {:.1?})",
        mc.tangle.point,
        mc.tangle.plus,
        mc.tangle.minus,
        AC8_MC_SAMPLES,
        start.elapsed()
    ))
}

fn ac9_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for i in 0..AC9_POINTS {
        let truth = random::density_matrix(&mut rng, 4);
        let data = simulate_counts(&truth, 50.0, 10.0, 1.0, i as u64).map_err(|e| e.to_string())?;
        let scale = rng.gen_range(0.5..2.0) * data.total() / 9.0;
        let point = random::density_matrix(&mut rng, 4).rho() * Complex64::new(scale, 0.0);
        let x = params_from_matrix(&point).map_err(|e| e.to_string())?;
        for model in [LikelihoodModel::RawPoisson, LikelihoodModel::BasisNormalized] {
            let g = objective_gradient(&x, &data, model);
            let mut diff = 0.0;
            for k in 0..N_PARAMS {
                let h = 1e-6 * x[k].abs().max(1e-3);
                let (mut xp, mut xm) = (x, x);
                xp[k] += h;
                xm[k] -= h;
                let fd = (objective(&xp, &data, model) - objective(&xm, &data, model)) / (2.0 * h);
                diff += (fd - g[k]).powi(2);
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rel = diff.sqrt() / norm;
            worst = worst.max(rel);
            ensure(rel < AC9_REL, || format!("point {i} {model:?}: relative error {rel:e}"))?;
        }
    }
    Ok(format!("{AC9_POINTS} points x 2 likelihoods, worst relative error {worst:.2e}"))
}

fn ac10_pump_combinatorics() -> Outcome {
    let d = JonesVector::diagonal();
    let identical = prepare_pump(&[OpticalElement::crystal(DELAY, 0.0), OpticalElement::crystal(DELAY, PI / 4.0)], d)
        .map_err(|e| e.to_string())?;
    ensure(identical.len() == 3, || format!("identical crystals gave {} delays", identical.len()))?;
    let distinct =
        prepare_pump(&[OpticalElement::crystal(DELAY, 0.0), OpticalElement::crystal(1.7e-12, PI / 4.0)], d)
            .map_err(|e| e.to_string())?;
    ensure(distinct.len() == 4, || format!("distinct crystals gave {} delays", distinct.len()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let path: Vec<OpticalElement> = (0..10)
            .map(|_| {
                let angle = rng.gen_range(0.0..PI);
                match rng.gen_range(0..3) {
                    0 => OpticalElement::crystal(rng.gen_range(0.5e-12..5e-12), angle),
                    1 => OpticalElement::HalfWave { angle },
                    _ => OpticalElement::QuarterWave { angle },
                }
            })
            .collect();
        let train = prepare_pump(&path, d).map_err(|e| e.to_string())?;
        worst = worst.max((train.total_norm() - 1.0).abs());
    }
    ensure(worst <= AC10_NORM, || format!("norm drift {worst:e}"))?;
    Ok(format!("3 and 4 delays; worst norm drift over 10-element paths {worst:.1e}"))
}

fn ac11_weights() -> Outcome {
    let mut ratios = Vec::new();
    for prep in [PrepId::Vi, PrepId::Vii, PrepId::Viii] {
        let pipe = build_pipeline(&Scenario::preset(prep)).map_err(|e| e.to_string())?;
        let w: Vec<f64> = (0..3).map(|m| pipe.slot_weight(m)).collect();
        for (got, want) in w.iter().zip([0.25, 0.5, 0.25]) {
            ensure((got - want).abs() <= AC11_WEIGHT, || format!("({prep}) weights {w:?}"))?;
        }
        let report = noiseless(prep)?;
        let rate = |d: &str| report.row(d).unwrap().signal_rate;
        for side in ["A", "C"] {
            let ratio = rate("B") / rate(side);
            ensure((ratio - AC11_RATE_RATIO).abs() <= AC11_RATE_TOL, || format!("({prep}) B/{side} rate {ratio}"))?;
            // the excess over 2 is exactly the outer channels' conversion loss
            let outer = if side == "A" { 0 } else { 2 };
            let expected = 2.0 * pipe.crosstalk[1][1] / pipe.crosstalk[outer][outer];
            ensure((ratio - expected).abs() < 1e-12, || format!("({prep}) ratio {ratio} vs {expected}"))?;
            ratios.push(ratio);
        }
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!("weights 0.25/0.5/0.25; B/A = B/C = {max:.4} (2 / outer-channel efficiency)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("AC1  comb spacing", ac1_comb_spacing),
        ("AC2  mode budget", ac2_mode_budget),
        ("AC3  bandwidth compression", ac3_bandwidth_compression),
        ("AC4  oracle equivalence", ac4_oracle_equivalence),
        ("AC5  table theory columns", ac5_table_theory),
        ("AC6  entanglement revelation", ac6_entanglement_revelation),
        ("AC7  crosstalk negligibility", ac7_crosstalk),
        ("AC8  tomography consistency", ac8_tomography),
        ("AC9  MLE gradient check", ac9_gradient),
        ("AC10 pump combinatorics", ac10_pump_combinatorics),
        ("AC11 weight distribution", ac11_weights),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("{name:<30} PASS  [{took:.2?}] {detail}"),
            Err(why) => {
                failed += 1;
                println!("{name:<30} FAIL  [{took:.2?}] {why}");
            }
        }
    }
    println!("\n{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
