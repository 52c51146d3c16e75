//! Parametric-bootstrap error bars: every count is redrawn from a Poisson
//! distribution with the observed value as mean and the state refitted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mle_reconstruct_with, poisson_draw, MleOptions, StateMetrics, TomographyDataset};
use crate::error::{Error, Result};
use crate::qmetrics::TwoQubitState;

pub const MIN_SAMPLES: usize = 100;
/// Largest tolerated fraction of resamples whose fit fails.
const MAX_FAILED_FRACTION: f64 = 0.1;

/// Point estimate with the 16th/50th/84th percentiles of the resampled
/// distribution. `plus`/`minus` are distances from the point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub point: f64,
    pub median: f64,
    pub p16: f64,
    pub p84: f64,
    pub plus: f64,
    pub minus: f64,
}

impl MetricSummary {
    fn from_samples(point: f64, mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let p16 = percentile(&samples, 0.16);
        let p84 = percentile(&samples, 0.84);
        Self {
            point,
            median: percentile(&samples, 0.5),
            p16,
            p84,
            plus: (p84 - point).max(0.0),
            minus: (point - p16).max(0.0),
        }
    }
}

/// Linear interpolation between order statistics of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub tangle: MetricSummary,
    pub purity: MetricSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<MetricSummary>,
    pub n_samples: usize,
    pub n_failed: usize,
}

/// Resamples the dataset `n_samples` times in parallel. Resample `i` uses
/// seed `seed + i`, so the result does not depend on thread scheduling.
pub fn monte_carlo_uncertainty(
    dataset: &TomographyDataset,
    n_samples: usize,
    seed: u64,
    target: Option<&TwoQubitState>,
    options: &MleOptions,
) -> Result<MonteCarloSummary> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Contract(format!("need at least {MIN_SAMPLES} Monte-Carlo samples, got {n_samples}")));
    }
    let point = StateMetrics::of(&mle_reconstruct_with(dataset, options)?.state, target);

    let fits: Vec<Option<StateMetrics>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let counts = dataset.counts.iter().map(|&n| poisson_draw(&mut rng, n)).collect();
            let resampled = TomographyDataset { counts, ..dataset.clone() };
            match mle_reconstruct_with(&resampled, options) {
                Ok(fit) => Some(StateMetrics::of(&fit.state, target)),
                Err(Error::Convergence { best, .. }) => {
                    log::debug!("resample {i} hit the iteration cap");
                    Some(StateMetrics::of(&best, target))
                }
                Err(e) => {
                    log::debug!("resample {i} failed: {e}");
                    None
                }
            }
        })
        .collect();
    let ok: Vec<StateMetrics> = fits.into_iter().flatten().collect();
    let n_failed = n_samples - ok.len();
    if n_failed as f64 > MAX_FAILED_FRACTION * n_samples as f64 {
        return Err(Error::DegenerateData(format!("{n_failed} of {n_samples} Monte-Carlo resamples failed")));
    }

    let collect = |f: fn(&StateMetrics) -> f64| ok.iter().map(f).collect::<Vec<_>>();
    Ok(MonteCarloSummary {
        tangle: MetricSummary::from_samples(point.tangle, collect(|m| m.tangle)),
        purity: MetricSummary::from_samples(point.purity, collect(|m| m.purity)),
        fidelity: point
            .fidelity
            .map(|p| MetricSummary::from_samples(p, ok.iter().filter_map(|m| m.fidelity).collect())),
        n_samples,
        n_failed,
    })
}
