//! Percentile bootstrap of the sample mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::descriptive::{percentile, sum};
use super::{Sample, StatsError};

pub const DEFAULT_RESAMPLES: usize = 10_000;
const MIN_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Mean of the resample means.
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    pub level: f64,
}

/// Draws `resamples` with-replacement resamples of `sample`, and reports the
/// mean of their means with the `(1 - level) / 2` and `(1 + level) / 2`
/// percentiles of the resample-mean distribution. Deterministic in `seed`.
pub fn bootstrap_ci(sample: &Sample, resamples: usize, seed: u64, level: f64) -> Result<BootstrapSummary, StatsError> {
    let n = sample.len();
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "bootstrap of {:?} needs at least 2 values",
            sample.label
        )));
    }
    if resamples < MIN_RESAMPLES {
        return Err(StatsError::Range(format!(
            "{resamples} resamples, need at least {MIN_RESAMPLES}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Range(format!("confidence level {level} outside (0, 1)")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = &sample.values;
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| sum((0..n).map(|_| values[rng.gen_range(0..n)])) / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);

    let lo = percentile(&means, 50.0 * (1.0 - level))?;
    let hi = percentile(&means, 50.0 * (1.0 + level))?;
    let mean_of_means = sum(means.iter().copied()) / resamples as f64;
    Ok(BootstrapSummary {
        // rounding in the grand sum can step one ulp outside a degenerate interval
        mean: mean_of_means.clamp(lo, hi),
        lo,
        hi,
        resamples,
        level,
    })
}
