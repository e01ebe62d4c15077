//! Percentile clamping.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::floor;

/// Linear-interpolation percentile of sorted data (`p` in [0, 1]).
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Clamps finite values to the `lower`/`upper` percentiles of the finite
/// values. Non-finite entries pass through unchanged.
pub fn winsorize(series: &[f64], lower: f64, upper: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = series.iter().copied().filter(|x| x.is_finite()).collect();
    if sorted.len() < 2 {
        return series.to_vec();
    }
    sorted.sort_by(f64::total_cmp);
    let lo = percentile_sorted(&sorted, lower);
    let hi = percentile_sorted(&sorted, upper);
    series
        .iter()
        .map(|&x| if x.is_finite() { x.clamp(lo, hi) } else { x })
        .collect()
}

/// [`winsorize`] applied separately within each group.
pub fn winsorize_by_group<K: Ord + Clone>(series: &[f64], groups: &[K], lower: f64, upper: f64) -> Vec<f64> {
    assert_eq!(series.len(), groups.len());
    let mut members: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g.clone()).or_default().push(i);
    }
    let mut out = series.to_vec();
    for idx in members.values() {
        let part: Vec<f64> = idx.iter().map(|&i| series[i]).collect();
        for (&i, v) in idx.iter().zip(winsorize(&part, lower, upper)) {
            out[i] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_unchanged() {
        assert_eq!(winsorize(&[3.0; 10], 0.01, 0.99), vec![3.0; 10]);
    }

    #[test]
    fn one_to_hundred() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = winsorize(&s, 0.01, 0.99);
        assert!((w[0] - 1.99).abs() < 1e-12);
        assert!((w[99] - 99.01).abs() < 1e-12);
        assert_eq!(w[50], 51.0);
    }

    #[test]
    fn outlier_clamped() {
        let mut s = vec![1.0; 99];
        s.push(1e9);
        let w = winsorize(&s, 0.01, 0.99);
        let p99 = 1.0 + 0.01 * (1e9 - 1.0);
        assert!((w[99] - p99).abs() < 1e-3);
        assert!(w[..99].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn nan_passes_through() {
        let w = winsorize(&[f64::NAN, 1.0, 2.0], 0.0, 1.0);
        assert!(w[0].is_nan());
    }

    #[test]
    fn grouped() {
        let s = [1.0, 100.0, 2.0, 200.0];
        let g = ['a', 'b', 'a', 'b'];
        assert_eq!(winsorize_by_group(&s, &g, 0.0, 1.0), s.to_vec());
    }
}
