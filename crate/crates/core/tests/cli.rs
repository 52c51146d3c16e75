//! End-to-end checks of the `demux` binary and the file formats it writes.

use std::path::Path;
use std::process::{Command, Output};

use chirpdemux::demuxsim::{DemuxReport, SUMMARY_HEADER};
use chirpdemux::qmetrics::{StateVector, TwoQubitState};
use chirpdemux::tomography::{simulate_counts, write_dataset_csv, ReconstructionReport};

fn demux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demux")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_report_summary_and_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vii");
    let o = demux(&["run", "--prep", "vii", "--seed", "42", "--exposure", "360", "--mc-samples", "100", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let report: DemuxReport = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.prep, "vii");
    assert_eq!(report.scenario.detector.exposure, 360.0);
    assert!(report.rows.iter().all(|r| r.measured.is_some()));

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_HEADER.join(","));
    let detectors: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(detectors, ["in", "A", "B", "C"]);

    for name in ["spectrum.csv", "spectrum_A.csv", "spectrum_B.csv", "spectrum_C.csv"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().count(), 4002, "{name}");
    }
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = demux(&["run", "--prep", "ii", "--mc-samples", "100", "--spectrum-points", "101", "--out", path(&out)]);
        assert!(o.status.success());
        std::fs::read_to_string(out.join("report.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.json");
    std::fs::write(&config, r#"{"prep": "iii", "seed": 7, "tomography": {"noiseless": true}}"#).unwrap();
    let out = dir.path().join("out");
    let o = demux(&["--config", path(&config), "run", "--prep", "vi", "--spectrum-points", "101", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: DemuxReport = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.prep, "vi");
    assert_eq!(report.scenario.seed, 7);
    assert!(report.rows.iter().all(|r| r.measured.is_none()));
}

#[test]
fn budget_reports_the_mode_window() {
    let o = demux(&["budget", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["max_modes"], 54);
    let ps = v["dtau_min"].as_f64().unwrap() * 1e12;
    assert!((ps - 0.3437).abs() < 1e-4, "{ps}");
}

#[test]
fn spectrum_writes_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.csv");
    let o = demux(&["spectrum", "--prep", "vii", "--points", "501", "--out", path(&file)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&file).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));
}

#[test]
fn tomo_reconstructs_a_count_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("counts.csv");
    let phi = TwoQubitState::from_pure(&StateVector::phi_plus()).unwrap();
    let data = simulate_counts(&phi, 13.9, 360.0, 0.34, 5).unwrap();
    write_dataset_csv(&data, std::fs::File::create(&input).unwrap()).unwrap();

    let json = dir.path().join("rec.json");
    let o = demux(&["tomo", "--input", path(&input), "--target", "phi+", "--mc-samples", "100", "--out", path(&json)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: ReconstructionReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(rec.metrics.fidelity.unwrap() > 0.95);
    assert_eq!(rec.error_bars.n_samples, 100);

    let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(raw["rho"]["basis"], serde_json::json!(["HH", "HV", "VH", "VV"]));
    assert_eq!(raw["rho"]["rho"].as_array().unwrap().len(), 16);
}

#[test]
fn contract_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"physics": {"chirp": 0.0}}"#).unwrap();
    assert_eq!(demux(&["--config", path(&bad), "budget"]).status.code(), Some(2));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"physics": {"chrip": 1e-24}}"#).unwrap();
    assert_eq!(demux(&["--config", path(&unknown), "budget"]).status.code(), Some(2));

    let csv = dir.path().join("short.csv");
    std::fs::write(&csv, "setting_a,setting_b,counts,exposure_s\nH,H,10,1\n").unwrap();
    assert_eq!(demux(&["tomo", "--input", path(&csv)]).status.code(), Some(2));

    let o = demux(&["run", "--prep", "vii", "--mc-samples", "5", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(demux(&["tomo", "--input", path(&csv), "--target", "nope"]).status.code(), Some(2));
}
