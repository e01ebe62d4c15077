//! Unit-level bootstrap of a statistic.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::iteration_rng;
use super::StatsError;
use crate::math::{mean, sample_sd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub statistic: String,
    /// Statistic on the original units.
    pub estimate: f64,
    pub resample_mean: f64,
    pub resample_sd: f64,
    pub iterations: usize,
    pub seed: u64,
    pub replicates: Vec<f64>,
}

impl BootstrapResult {
    pub fn from_replicates(statistic: &str, estimate: f64, seed: u64, replicates: Vec<f64>) -> BootstrapResult {
        BootstrapResult {
            statistic: statistic.to_string(),
            estimate,
            resample_mean: mean(&replicates),
            resample_sd: if replicates.len() >= 2 { sample_sd(&replicates) } else { 0.0 },
            iterations: replicates.len(),
            seed,
            replicates,
        }
    }

    /// Equal-width histogram over the replicate range: `(lower edge, count)`.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, usize)> {
        let bins = bins.max(1);
        let lo = self.replicates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.replicates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = alloc::vec![0usize; bins];
        for &r in &self.replicates {
            let b = (((r - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        counts.into_iter().enumerate().map(|(i, c)| (lo + i as f64 * width, c)).collect()
    }
}

/// One resample: draws `units.len()` units with replacement into `buf`
/// and evaluates `stat`.
pub fn bootstrap_replicate<T: Clone, F: Fn(&[T]) -> f64>(units: &[T], stat: &F, seed: u64, iteration: u64, buf: &mut Vec<T>) -> f64 {
    let mut rng = iteration_rng(seed, iteration);
    buf.clear();
    buf.extend((0..units.len()).map(|_| units[rng.gen_range(0..units.len())].clone()));
    stat(buf)
}

pub fn bootstrap<T: Clone, F: Fn(&[T]) -> f64>(
    name: &str,
    units: &[T],
    stat: F,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapResult, StatsError> {
    if units.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut buf = Vec::with_capacity(units.len());
    let reps = (0..iterations as u64)
        .map(|i| bootstrap_replicate(units, &stat, seed, i, &mut buf))
        .collect();
    Ok(BootstrapResult::from_replicates(name, stat(units), seed, reps))
}

/// One resample of the mean without materialising the resample.
pub fn mean_replicate(units: &[f64], seed: u64, iteration: u64) -> f64 {
    let mut rng = iteration_rng(seed, iteration);
    let n = units.len();
    (0..n).map(|_| units[rng.gen_range(0..n)]).sum::<f64>() / n as f64
}

/// Bootstrap of a share: the mean of 0/1 indicators.
pub fn bootstrap_mean(name: &str, units: &[f64], iterations: usize, seed: u64) -> Result<BootstrapResult, StatsError> {
    if units.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let reps = (0..iterations as u64).map(|i| mean_replicate(units, seed, i)).collect();
    Ok(BootstrapResult::from_replicates(name, mean(units), seed, reps))
}
