//! Statistics engine: fixed-effects OLS with cluster-robust errors, logit,
//! Welch t-tests, Fisher permutation tests, bootstrap and match ratios.

pub mod bootstrap;
pub mod describe;
pub mod dist;
pub mod frame;
pub mod linalg;
pub mod logit;
pub mod match_ratio;
pub mod ols;
pub mod permutation;
pub mod rng;
pub mod spec;
pub mod ttest;

pub use bootstrap::{bootstrap, bootstrap_mean, BootstrapResult};
pub use describe::{describe, Describe};
pub use frame::Frame;
pub use logit::logit;
pub use match_ratio::{match_ratio, MatchRatio};
pub use ols::{fe_ols, RegressionResult};
pub use permutation::{fisher_permutation_diff, PermutationResult};
pub use spec::{Cmp, Filter, RegressionSpec, SeKind, Winsorize};
pub use ttest::{two_sample_t, TTest};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("no usable observations")]
    EmptySample,
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("need at least two clusters, found {0}")]
    TooFewClusters(usize),
    #[error("perfect separation detected")]
    Separation,
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("group has fewer than two observations or no variance")]
    DegenerateGroup,
    #[error("input is empty")]
    EmptyInput,
    #[error("repetition {run} has no annotation for `{conver_id}`")]
    CoverageGap { run: usize, conver_id: String },
}
