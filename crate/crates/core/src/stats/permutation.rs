//! Fisher permutation test for a coefficient difference across two
//! subsamples.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ols::fit_prepared;
use super::rng::iteration_rng;
use super::spec::{prepare, Prepared};
use super::{Frame, RegressionSpec, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub term: String,
    pub partition: String,
    /// Coefficient in the partition == 1 subsample.
    pub coef_1: f64,
    /// Coefficient in the partition == 0 subsample.
    pub coef_0: f64,
    pub observed_diff: f64,
    pub p_two_sided: f64,
    pub n_perm: usize,
    pub seed: u64,
}

fn diff_for(p: &Prepared, labels: &[bool], term: usize, spec: &RegressionSpec) -> Result<(f64, f64), StatsError> {
    let (mut one, mut zero) = (Vec::new(), Vec::new());
    for (i, &l) in labels.iter().enumerate() {
        if l {
            one.push(i);
        } else {
            zero.push(i);
        }
    }
    let b1 = fit_prepared(&p.subset(&one), spec.se)?.coef[term];
    let b0 = fit_prepared(&p.subset(&zero), spec.se)?.coef[term];
    if b1.is_nan() || b0.is_nan() {
        return Err(StatsError::SingularDesign);
    }
    Ok((b1, b0))
}

/// Shuffled labels for permutation `iteration`.
pub fn permuted_labels(labels: &[bool], seed: u64, iteration: u64) -> Vec<bool> {
    let mut rng = iteration_rng(seed, iteration);
    let mut out = labels.to_vec();
    for i in (1..out.len()).rev() {
        out.swap(i, rng.gen_range(0..=i));
    }
    out
}

/// Prepared sample plus 0/1 partition labels, shared by every permutation.
#[derive(Debug, Clone)]
pub struct PermutationSetup {
    pub prepared: Prepared,
    pub labels: Vec<bool>,
    pub term: usize,
}

pub fn permutation_setup(spec: &RegressionSpec, frame: &Frame, partition: &str, term: &str) -> Result<PermutationSetup, StatsError> {
    let prepared = prepare(spec, frame, &[partition])?;
    let term = prepared
        .terms
        .iter()
        .position(|t| t == term)
        .ok_or_else(|| StatsError::InvalidSpec(alloc::format!("`{term}` is not a term of the model")))?;
    let mut labels = Vec::with_capacity(prepared.n());
    for &v in &prepared.extra[0] {
        match v {
            0.0 => labels.push(false),
            1.0 => labels.push(true),
            _ => return Err(StatsError::InvalidSpec(alloc::format!("partition `{partition}` is not 0/1"))),
        }
    }
    Ok(PermutationSetup { prepared, labels, term })
}

/// |difference| for one permutation of the setup's labels.
pub fn permuted_abs_diff(setup: &PermutationSetup, spec: &RegressionSpec, seed: u64, iteration: u64) -> Result<f64, StatsError> {
    let labels = permuted_labels(&setup.labels, seed, iteration);
    let (b1, b0) = diff_for(&setup.prepared, &labels, setup.term, spec)?;
    Ok((b1 - b0).abs())
}

/// Combines the observed fit with permuted |differences|.
pub fn permutation_result(
    setup: &PermutationSetup,
    spec: &RegressionSpec,
    partition: &str,
    permuted: &[f64],
    seed: u64,
) -> Result<PermutationResult, StatsError> {
    if permuted.is_empty() {
        return Err(StatsError::InvalidSpec("permutation count must be positive".into()));
    }
    let (b1, b0) = diff_for(&setup.prepared, &setup.labels, setup.term, spec)?;
    let observed = b1 - b0;
    // Tolerance keeps exact ties (e.g. relabelled partitions) counted.
    let tol = 1e-12 * observed.abs().max(1.0);
    let extreme = permuted.iter().filter(|&&d| d >= observed.abs() - tol).count();
    Ok(PermutationResult {
        term: setup.prepared.terms[setup.term].clone(),
        partition: partition.to_string(),
        coef_1: b1,
        coef_0: b0,
        observed_diff: observed,
        p_two_sided: (1 + extreme) as f64 / (permuted.len() + 1) as f64,
        n_perm: permuted.len(),
        seed,
    })
}

/// Difference in the coefficient on `term` between the partition == 1
/// and partition == 0 subsamples, with a permutation p-value.
pub fn fisher_permutation_diff(
    spec: &RegressionSpec,
    frame: &Frame,
    partition: &str,
    term: &str,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult, StatsError> {
    if n_perm == 0 {
        return Err(StatsError::InvalidSpec("permutation count must be positive".into()));
    }
    let setup = permutation_setup(spec, frame, partition, term)?;
    let permuted = (0..n_perm as u64)
        .map(|i| permuted_abs_diff(&setup, spec, seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    permutation_result(&setup, spec, partition, &permuted, seed)
}
