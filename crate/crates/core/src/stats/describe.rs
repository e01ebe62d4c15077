//! Descriptive statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{mean, sample_sd};
use crate::panel::winsor::percentile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Describe {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

/// Summary of the finite values; all statistics are `NaN` when none exist.
pub fn describe(values: &[f64]) -> Describe {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Describe {
            n: 0,
            mean: f64::NAN,
            sd: f64::NAN,
            min: f64::NAN,
            p25: f64::NAN,
            median: f64::NAN,
            p75: f64::NAN,
            max: f64::NAN,
        };
    }
    v.sort_by(f64::total_cmp);
    Describe {
        n: v.len(),
        mean: mean(&v),
        sd: sample_sd(&v),
        min: v[0],
        p25: percentile_sorted(&v, 0.25),
        median: percentile_sorted(&v, 0.5),
        p75: percentile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    }
}
