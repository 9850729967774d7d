use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time a force signal spends above each threshold, averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceHistogram {
    /// N, strictly increasing.
    pub thresholds: Vec<f64>,
    /// Mean time per trial above each threshold, s.
    pub mean_duration: Vec<f64>,
    /// Per trial, time above each threshold, s.
    pub per_trial: Vec<Vec<f64>>,
}

impl ExceedanceHistogram {
    /// Splits `force` (sampled every `dt`) into consecutive trials of
    /// `trial_len` samples; a trailing partial trial is dropped.
    pub fn from_series(force: &[f64], dt: f64, trial_len: usize, thresholds: &[f64]) -> Result<Self> {
        if trial_len == 0 || !(dt > 0.0) {
            return Err(Error::InvalidConfig("exceedance trials need positive length and dt".into()));
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("exceedance thresholds must increase".into()));
        }
        let per_trial: Vec<Vec<f64>> = force
            .chunks_exact(trial_len)
            .map(|trial| {
                thresholds
                    .iter()
                    .map(|&th| trial.iter().filter(|&&f| f > th).count() as f64 * dt)
                    .collect()
            })
            .collect();
        let n = per_trial.len().max(1) as f64;
        let mean_duration =
            (0..thresholds.len()).map(|k| per_trial.iter().map(|d| d[k]).sum::<f64>() / n).collect();
        Ok(Self { thresholds: thresholds.to_vec(), mean_duration, per_trial })
    }

    /// Every trial's durations are non-increasing in the threshold.
    pub fn is_monotone(&self) -> bool {
        self.per_trial
            .iter()
            .chain(std::iter::once(&self.mean_duration))
            .all(|d| d.windows(2).all(|w| w[1] <= w[0]))
    }
}
