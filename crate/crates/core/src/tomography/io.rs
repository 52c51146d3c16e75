//! Count table CSV: `setting_a,setting_b,counts,exposure_s`, one row per
//! projector in any order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Polarization, ProjectorSet, TomographyDataset, N_SETTINGS};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    setting_a: String,
    setting_b: String,
    counts: f64,
    exposure_s: f64,
}

pub fn write_dataset_csv<W: Write>(dataset: &TomographyDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (p, &n) in ProjectorSet::standard().projectors().iter().zip(&dataset.counts) {
        w.serialize(Row {
            setting_a: p.a.label().to_string(),
            setting_b: p.b.label().to_string(),
            counts: n,
            exposure_s: dataset.exposure,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a count table. Every setting must appear exactly once and all rows
/// must share one exposure time.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<TomographyDataset> {
    let set = ProjectorSet::standard();
    let mut counts = vec![None; N_SETTINGS];
    let mut exposure: Option<f64> = None;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let a: Polarization = row.setting_a.parse()?;
        let b: Polarization = row.setting_b.parse()?;
        let k = set.index_of(a, b);
        if counts[k].replace(row.counts).is_some() {
            return Err(Error::Parse(format!("row {}: setting {a},{b} appears twice", line + 2)));
        }
        match exposure {
            None => exposure = Some(row.exposure_s),
            Some(e) if e != row.exposure_s => {
                return Err(Error::Parse(format!(
                    "row {}: exposure {} differs from {e}; mixed exposures are not supported",
                    line + 2,
                    row.exposure_s
                )))
            }
            Some(_) => {}
        }
    }
    let missing: Vec<String> = set
        .projectors()
        .iter()
        .zip(&counts)
        .filter(|(_, c)| c.is_none())
        .map(|(p, _)| format!("{},{}", p.a, p.b))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse(format!("missing settings: {}", missing.join(" "))));
    }
    let counts = counts.into_iter().map(Option::unwrap).collect();
    TomographyDataset::new(counts, exposure.unwrap_or(0.0), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmetrics::{StateVector, TwoQubitState};
    use crate::tomography::simulate_counts;

    #[test]
    fn round_trip() {
        let s = TwoQubitState::from_pure(&StateVector::phi_plus()).unwrap();
        let mut d = simulate_counts(&s, 13.9, 360.0, 0.4, 3).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("setting_a,setting_b,counts,exposure_s\nH,H,"));
        let back = read_dataset_csv(buf.as_slice()).unwrap();
        d.mean_rate = None;
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_incomplete_or_inconsistent_tables() {
        let missing = "setting_a,setting_b,counts,exposure_s\nH,H,1,1\n";
        assert!(matches!(read_dataset_csv(missing.as_bytes()), Err(Error::Parse(_))));
        let dup = "setting_a,setting_b,counts,exposure_s\nH,H,1,1\nH,H,2,1\n";
        assert!(matches!(read_dataset_csv(dup.as_bytes()), Err(Error::Parse(_))));
        let bad = "setting_a,setting_b,counts,exposure_s\nQ,H,1,1\n";
        assert!(matches!(read_dataset_csv(bad.as_bytes()), Err(Error::Parse(_))));
    }
}
