//! Command-line front end: run scenarios, print the mode budget, write comb
//! spectra and reconstruct states from count tables.

use std::path::PathBuf;
use std::process::ExitCode;

use chirpdemux::demuxsim::{comb_spectrum, emit_report, run_scenario, PrepId, PrepSpec, Scenario};
use chirpdemux::qmetrics::named_state;
use chirpdemux::spectral::fwhm_wavelength_to_rms_omega;
use chirpdemux::tomography::{read_dataset_csv, reconstruct_with_errors, LikelihoodModel, MleOptions};
use chirpdemux::upconvert::mode_budget;
use chirpdemux::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "demux", version, about = "Chirped-pulse temporal-mode demultiplexing simulator")]
struct Cli {
    /// Scenario JSON; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Raw,
    Basis,
}

impl From<Model> for LikelihoodModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Raw => LikelihoodModel::RawPoisson,
            Model::Basis => LikelihoodModel::BasisNormalized,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a full scenario and write report.json, summary.csv and spectra.
    Run {
        #[arg(long)]
        prep: Option<PrepId>,
        #[arg(long)]
        seed: Option<u64>,
        /// Integration time per setting for the channel detectors, s.
        #[arg(long)]
        exposure: Option<f64>,
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Report noiseless states only, without simulated counts.
        #[arg(long)]
        noiseless: bool,
        #[arg(long, default_value_t = 4001)]
        spectrum_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the feasible pulse-separation window and mode count.
    Budget {
        #[arg(long)]
        json: bool,
    },
    /// Write the comb spectrum of a preparation as CSV.
    Spectrum {
        #[arg(long)]
        prep: Option<PrepId>,
        #[arg(long, default_value_t = 4001)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a state from a count table.
    Tomo {
        #[arg(long)]
        input: PathBuf,
        /// Reference state for the fidelity: phi+, phi-, phi+i, phi-i, psi+, psi-, hh, vv, mixed.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 200)]
        mc_samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "raw")]
        model: Model,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn base_scenario(config: &Option<PathBuf>) -> Result<Scenario> {
    match config {
        Some(path) => Scenario::from_json_file(path),
        None => Ok(Scenario::default()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut scenario = base_scenario(&cli.config)?;
    match cli.command {
        Command::Run { prep, seed, exposure, mc_samples, noiseless, spectrum_points, out } => {
            if let Some(p) = prep {
                scenario.prep = PrepSpec::Preset(p);
            }
            if let Some(s) = seed {
                scenario.seed = s;
            }
            if let Some(e) = exposure {
                scenario.detector.exposure = e;
            }
            if let Some(n) = mc_samples {
                scenario.tomography.mc_samples = n;
            }
            scenario.tomography.noiseless |= noiseless;
            scenario.validate()?;
            let report = run_scenario(&scenario)?;
            let files = emit_report(&report, &out, spectrum_points)?;
            for row in &report.rows {
                let meas = row.measured.as_ref().map(|m| &m.reconstruction.metrics);
                println!(
                    "{:>3}  tangle {} (theo {:.3})  purity {} (theo {:.3}){}",
                    row.detector,
                    meas.map_or("  -  ".to_string(), |m| format!("{:.3}", m.tangle)),
                    row.theo.tangle,
                    meas.map_or("  -  ".to_string(), |m| format!("{:.3}", m.purity)),
                    row.theo.purity,
                    if row.background_only { "  [background]" } else { "" },
                );
            }
            println!("wrote {}", files.json.display());
        }
        Command::Budget { json } => {
            let p = &scenario.physics;
            let sigma_s = fwhm_wavelength_to_rms_omega(p.signal_wavelength, p.signal_fwhm)?;
            let sigma_e = fwhm_wavelength_to_rms_omega(p.escort_wavelength, p.escort_fwhm)?;
            let budget = mode_budget(sigma_s, sigma_e, p.chirp)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&budget)?);
            } else {
                println!("dtau_min  {:.4} ps", budget.dtau_min * 1e12);
                println!("dtau_max  {:.4} ps", budget.dtau_max * 1e12);
                println!("max_modes {}", budget.max_modes);
            }
        }
        Command::Spectrum { prep, points, out } => {
            if let Some(p) = prep {
                scenario.prep = PrepSpec::Preset(p);
            }
            let report = run_scenario(&scenario.noiseless())?;
            comb_spectrum(&report, points)?.write_total_csv(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Tomo { input, target, mc_samples, seed, model, out } => {
            let dataset = read_dataset_csv(std::fs::File::open(&input)?)?;
            let target = target.as_deref().map(named_state).transpose()?;
            let options = MleOptions { model: model.into(), ..Default::default() };
            let report = reconstruct_with_errors(&dataset, target.as_ref(), mc_samples, seed, &options)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Convergence { diagnostics, .. } = e.root() {
                eprintln!("diagnostics: {diagnostics:?}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
