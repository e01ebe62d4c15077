//! Welch two-sample t-test.

use serde::{Deserialize, Serialize};

use super::dist::t_two_sided;
use super::StatsError;
use crate::math::{mean, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_a - mean_b`.
    pub mean_diff: f64,
    pub t_stat: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
    pub p: f64,
}

fn var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() < 2 || b.len() < 2 || a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::DegenerateGroup);
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma) / a.len() as f64, var(b, mb) / b.len() as f64);
    let diff = ma - mb;
    let se2 = va + vb;
    if se2 == 0.0 {
        if diff == 0.0 {
            return Ok(TTest {
                mean_a: ma,
                mean_b: mb,
                mean_diff: 0.0,
                t_stat: 0.0,
                df: (a.len() + b.len() - 2) as f64,
                p: 1.0,
            });
        }
        return Err(StatsError::DegenerateGroup);
    }
    let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let t = diff / sqrt(se2);
    Ok(TTest {
        mean_a: ma,
        mean_b: mb,
        mean_diff: diff,
        t_stat: t,
        df,
        p: t_two_sided(t, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_swapped() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = two_sample_t(&a, &a).unwrap();
        assert_eq!(r.mean_diff, 0.0);
        assert_eq!(r.t_stat, 0.0);
        let b = [2.0, 4.0, 6.0];
        let (x, y) = (two_sample_t(&a, &b).unwrap(), two_sample_t(&b, &a).unwrap());
        assert_eq!(x.mean_diff, -y.mean_diff);
        assert_eq!(x.t_stat, -y.t_stat);
        assert_eq!(x.p, y.p);
        assert_eq!(two_sample_t(&[1.0], &b), Err(StatsError::DegenerateGroup));
    }
}
