//! Report output: full JSON, a per-detector summary table and comb spectra.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{ChannelRow, DemuxReport};
use crate::error::{Error, Result};
use crate::spectral::write_two_column_csv;

/// Summary columns: counts, tangle (measured ± and theory), purity
/// (measured ± and theory), fidelity to the theory state.
pub const SUMMARY_HEADER: [&str; 16] = [
    "prep",
    "detector",
    "counts_cps",
    "counts_err",
    "tangle_meas",
    "tangle_plus",
    "tangle_minus",
    "tangle_theo",
    "purity_meas",
    "purity_plus",
    "purity_minus",
    "purity_theo",
    "fidelity",
    "fidelity_plus",
    "fidelity_minus",
    "background_only",
];

/// Half-widths of margin around the outermost comb lines.
const SPECTRUM_MARGIN: f64 = 8.0;

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn summary_record(prep: &str, row: &ChannelRow) -> Vec<String> {
    let m = row.measured.as_ref();
    let rec = m.map(|m| &m.reconstruction);
    let bars = rec.map(|r| &r.error_bars);
    let fid = bars.and_then(|b| b.fidelity);
    vec![
        prep.to_string(),
        row.detector.clone(),
        cell(m.map(|m| m.counts_cps)),
        cell(m.map(|m| m.counts_err)),
        cell(rec.map(|r| r.metrics.tangle)),
        cell(bars.map(|b| b.tangle.plus)),
        cell(bars.map(|b| b.tangle.minus)),
        cell(Some(row.theo.tangle)),
        cell(rec.map(|r| r.metrics.purity)),
        cell(bars.map(|b| b.purity.plus)),
        cell(bars.map(|b| b.purity.minus)),
        cell(Some(row.theo.purity)),
        cell(rec.and_then(|r| r.metrics.fidelity)),
        cell(fid.map(|f| f.plus)),
        cell(fid.map(|f| f.minus)),
        row.background_only.to_string(),
    ]
}

/// One line per detector, slow detector first.
pub fn write_summary_csv<W: Write>(report: &DemuxReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for row in &report.rows {
        w.write_record(summary_record(&report.prep, row))?;
    }
    w.flush()?;
    Ok(())
}

/// Comb intensity on a shared frequency grid, per channel and in total.
#[derive(Debug, Clone, PartialEq)]
pub struct CombSpectrum {
    /// Angular frequency, rad/s.
    pub omegas: Vec<f64>,
    /// `(detector, weight × |f_g(ω)|²)` for every channel with signal.
    pub channels: Vec<(String, Vec<f64>)>,
}

impl CombSpectrum {
    pub fn total(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.omegas.len()];
        for (_, v) in &self.channels {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        sum
    }

    pub fn write_total_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path.as_ref(), &self.omegas, &self.total())
    }

    /// Local maxima of the total spectrum, rad/s.
    pub fn peaks(&self) -> Vec<f64> {
        let t = self.total();
        (1..t.len().saturating_sub(1))
            .filter(|&i| t[i] > t[i - 1] && t[i] >= t[i + 1])
            .map(|i| self.omegas[i])
            .collect()
    }
}

fn write_csv(path: &Path, omegas: &[f64], values: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_two_column_csv(&mut out, omegas.iter().copied().zip(values.iter().copied()))?;
    Ok(())
}

/// Samples every populated comb line on `n_points` spanning all lines with
/// a margin of several RMS widths.
pub fn comb_spectrum(report: &DemuxReport, n_points: usize) -> Result<CombSpectrum> {
    if n_points < 2 {
        return Err(Error::Contract(format!("spectrum needs at least 2 points, got {n_points}")));
    }
    let lines: Vec<_> = report.channels().filter_map(|r| r.comb.map(|c| (r, c.line))).collect();
    if lines.is_empty() {
        return Err(Error::Contract("report has no comb channels".to_string()));
    }
    let width = lines.iter().map(|(_, l)| l.rms_width).fold(0.0, f64::max);
    let lo = lines.iter().map(|(_, l)| l.center_omega).fold(f64::INFINITY, f64::min) - SPECTRUM_MARGIN * width;
    let hi = lines.iter().map(|(_, l)| l.center_omega).fold(f64::NEG_INFINITY, f64::max) + SPECTRUM_MARGIN * width;
    let step = (hi - lo) / (n_points - 1) as f64;
    let omegas: Vec<f64> = (0..n_points).map(|i| lo + i as f64 * step).collect();
    let channels = lines
        .iter()
        .filter(|(r, _)| !r.background_only)
        .map(|(r, l)| (r.detector.clone(), omegas.iter().map(|&w| r.weight * l.intensity_at(w)).collect()))
        .collect();
    Ok(CombSpectrum { omegas, channels })
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub json: PathBuf,
    pub summary: PathBuf,
    /// Total comb spectrum followed by one file per populated channel.
    pub spectra: Vec<PathBuf>,
}

/// Writes `report.json`, `summary.csv`, `spectrum.csv` and
/// `spectrum_<detector>.csv` into `dir`, creating it if needed.
pub fn emit_report(report: &DemuxReport, dir: impl AsRef<Path>, spectrum_points: usize) -> Result<EmittedFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let json = dir.join("report.json");
    let mut out = BufWriter::new(File::create(&json)?);
    serde_json::to_writer_pretty(&mut out, report)?;
    out.flush()?;

    let summary = dir.join("summary.csv");
    write_summary_csv(report, BufWriter::new(File::create(&summary)?))?;

    let spectrum = comb_spectrum(report, spectrum_points)?;
    let total = dir.join("spectrum.csv");
    spectrum.write_total_csv(&total)?;
    let mut spectra = vec![total];
    for (name, values) in &spectrum.channels {
        let path = dir.join(format!("spectrum_{name}.csv"));
        write_csv(&path, &spectrum.omegas, values)?;
        spectra.push(path);
    }
    Ok(EmittedFiles { json, summary, spectra })
}
