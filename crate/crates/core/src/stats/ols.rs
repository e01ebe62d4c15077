//! Two-way fixed-effects OLS by alternating demeaning.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dist::t_two_sided;
use super::linalg::{cholesky, cholesky_inverse, cholesky_solve, collinear_columns, Matrix};
use super::spec::{prepare, FixedEffects, Levels, Prepared, RegressionSpec, SeKind};
use super::{Frame, StatsError};
use crate::math::sqrt;

pub const DEMEAN_TOL: f64 = 1e-10;
pub const DEMEAN_MAX_SWEEPS: usize = 10_000;
pub const CONSTANT: &str = "Constant";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub name: String,
    pub dependent: String,
    /// Terms in spec order followed by the constant.
    pub terms: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    /// Terms dropped as collinear; their estimates are NaN.
    #[serde(default)]
    pub omitted: Vec<String>,
    pub n_obs: usize,
    pub n_clusters: Option<usize>,
    pub r2: f64,
    pub adj_r2: f64,
    pub within_r2: f64,
    /// Parameters absorbed by the fixed effects, net of the constant.
    pub absorbed: usize,
    /// Demeaning sweeps needed by the slowest column.
    pub iterations: usize,
    pub fixed_effects: FixedEffects,
    pub se_kind: SeKind,
    /// Degrees of freedom behind the p-values.
    pub df: f64,
    /// Pseudo R² for likelihood models.
    pub pseudo_r2: Option<f64>,
    pub spec: Option<RegressionSpec>,
}

impl RegressionResult {
    fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coef_of(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.coef[i])
    }

    pub fn se_of(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.se[i])
    }

    pub fn t_of(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.t[i])
    }

    pub fn p_of(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.p[i])
    }
}

/// Subtracts group means in place; returns the largest mean removed.
fn sweep(v: &mut [f64], g: &Levels, sums: &mut Vec<f64>, counts: &[f64]) -> f64 {
    sums.clear();
    sums.resize(counts.len(), 0.0);
    for (x, &c) in v.iter().zip(&g.codes) {
        sums[c as usize] += x;
    }
    for (s, n) in sums.iter_mut().zip(counts) {
        *s /= n;
    }
    for (x, &c) in v.iter_mut().zip(&g.codes) {
        *x -= sums[c as usize];
    }
    sums.iter().fold(0.0, |m, s| m.max(s.abs()))
}

fn counts(g: &Levels) -> Vec<f64> {
    let mut c = vec![0.0; g.n_levels()];
    for &k in &g.codes {
        c[k as usize] += 1.0;
    }
    c
}

/// Removes the fixed effects from `v`; returns the sweeps used.
pub fn demean(v: &mut [f64], groups: &[&Levels]) -> Result<usize, StatsError> {
    if groups.is_empty() {
        return Ok(0);
    }
    let cs: Vec<Vec<f64>> = groups.iter().map(|g| counts(g)).collect();
    let mut sums = Vec::new();
    let scale = 1.0 + sqrt(v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64);
    if groups.len() == 1 {
        sweep(v, groups[0], &mut sums, &cs[0]);
        return Ok(1);
    }
    for it in 1..=DEMEAN_MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for (g, c) in groups.iter().zip(&cs) {
            delta = delta.max(sweep(v, g, &mut sums, c));
        }
        if it > 1 && delta <= DEMEAN_TOL * scale {
            return Ok(it);
        }
    }
    Err(StatsError::NonConvergence(DEMEAN_MAX_SWEEPS))
}

/// Connected components of the bipartite graph linking two sets of levels.
pub fn components(a: &Levels, b: &Levels) -> usize {
    let na = a.n_levels();
    let mut parent: Vec<usize> = (0..na + b.n_levels()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (&x, &y) in a.codes.iter().zip(&b.codes) {
        let (rx, ry) = (find(&mut parent, x as usize), find(&mut parent, na + y as usize));
        if rx != ry {
            parent[rx] = ry;
        }
    }
    (0..parent.len()).filter(|&i| find(&mut parent, i) == i).count()
}

/// True when every level of `inner` sits inside a single cluster.
fn nested(inner: &Levels, cluster: &Levels) -> bool {
    let mut owner = vec![u32::MAX; inner.n_levels()];
    for (&i, &c) in inner.codes.iter().zip(&cluster.codes) {
        let o = &mut owner[i as usize];
        if *o == u32::MAX {
            *o = c;
        } else if *o != c {
            return false;
        }
    }
    true
}

pub fn fe_ols(spec: &RegressionSpec, frame: &Frame) -> Result<RegressionResult, StatsError> {
    let p = prepare(spec, frame, &[])?;
    let mut r = fit_prepared(&p, spec.se)?;
    r.name = spec.name.clone();
    r.fixed_effects = spec.fixed_effects;
    r.spec = Some(spec.clone());
    Ok(r)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits a prepared sample. Fixed effects are whichever of `firm`/`quarter`
/// levels `p` carries.
pub fn fit_prepared(p: &Prepared, se_kind: SeKind) -> Result<RegressionResult, StatsError> {
    let n = p.n();
    let k = p.x.len();
    let groups: Vec<&Levels> = [p.firm.as_ref(), p.quarter.as_ref()].into_iter().flatten().collect();

    let mut iterations = 0;
    let ybar = mean(&p.y);
    // Grand means are added back only after demeaning.
    let add_back = |v: f64| if groups.is_empty() { 0.0 } else { v };
    let mut yt = p.y.clone();
    iterations = iterations.max(demean(&mut yt, &groups)?);
    let within_sst: f64 = if groups.is_empty() {
        yt.iter().map(|v| (v - ybar) * (v - ybar)).sum()
    } else {
        yt.iter().map(|v| v * v).sum()
    };
    yt.iter_mut().for_each(|v| *v += add_back(ybar));
    let mut design: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for col in &p.x {
        let m = add_back(mean(col));
        let mut c = col.clone();
        iterations = iterations.max(demean(&mut c, &groups)?);
        c.iter_mut().for_each(|v| *v += m);
        design.push(c);
    }
    design.push(vec![1.0; n]);
    // Regressors absorbed by the fixed effects or collinear with earlier
    // terms are omitted and reported with missing estimates.
    let order: Vec<usize> = core::iter::once(k).chain(0..k).collect();
    let flagged = collinear_columns(&design, &order);
    if flagged[k] {
        return Err(StatsError::SingularDesign);
    }
    let kept: Vec<usize> = (0..=k).filter(|&j| !flagged[j]).collect();
    let omitted: Vec<String> = (0..k).filter(|&j| flagged[j]).map(|j| p.terms[j].clone()).collect();
    let design: Vec<Vec<f64>> = kept.iter().map(|&j| core::mem::take(&mut design[j])).collect();
    let m = design.len();

    let absorbed = match (&p.firm, &p.quarter) {
        (Some(f), Some(q)) => f.n_levels() + q.n_levels() - components(f, q),
        (Some(g), None) | (None, Some(g)) => g.n_levels(),
        (None, None) => 1,
    } - 1;
    let k_full = m + absorbed;
    if n <= k_full {
        return Err(StatsError::SingularDesign);
    }

    let xtx = Matrix::cross(&design, None);
    let l = cholesky(&xtx)?;
    let xty: Vec<f64> = design.iter().map(|c| c.iter().zip(&yt).map(|(a, b)| a * b).sum()).collect();
    let beta = cholesky_solve(&l, &xty);
    let inv = cholesky_inverse(&l);
    let resid: Vec<f64> = (0..n)
        .map(|i| yt[i] - design.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>())
        .collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let sst: f64 = p.y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let (nf, kf) = (n as f64, k_full as f64);

    let (cov, df, n_clusters) = match se_kind {
        SeKind::Classical => {
            let s2 = ssr / (nf - kf);
            (scale(&inv, s2), nf - kf, None)
        }
        SeKind::Hc1 => {
            let meat = Matrix::cross(&design, Some(&resid.iter().map(|e| e * e).collect::<Vec<_>>()));
            (scale(&inv.sandwich(&meat), nf / (nf - kf)), nf - kf, None)
        }
        SeKind::Cr1 | SeKind::Cr0 => {
            let cl = p.cluster.as_ref().ok_or_else(|| StatsError::InvalidSpec("no cluster column".into()))?;
            let g = cl.n_levels();
            if g < 2 {
                return Err(StatsError::TooFewClusters(g));
            }
            let mut scores = vec![vec![0.0; m]; g];
            for i in 0..n {
                let s = &mut scores[cl.codes[i] as usize];
                for (j, c) in design.iter().enumerate() {
                    s[j] += c[i] * resid[i];
                }
            }
            let mut meat = Matrix::zeros(m);
            for s in &scores {
                for a in 0..m {
                    for b in 0..m {
                        meat.add(a, b, s[a] * s[b]);
                    }
                }
            }
            let gf = g as f64;
            let mut c = gf / (gf - 1.0);
            if se_kind == SeKind::Cr1 {
                let nested_levels: usize = groups.iter().filter(|l| nested(l, cl)).map(|l| l.n_levels() - 1).sum();
                let k_eff = (k_full - nested_levels.min(absorbed)) as f64;
                c *= (nf - 1.0) / (nf - k_eff);
            }
            (scale(&inv.sandwich(&meat), c), gf - 1.0, Some(g))
        }
    };

    let mut coef = vec![f64::NAN; k + 1];
    let mut se = vec![f64::NAN; k + 1];
    for (a, &j) in kept.iter().enumerate() {
        coef[j] = beta[a];
        se[j] = sqrt(cov.get(a, a).max(0.0));
    }
    let t: Vec<f64> = coef.iter().zip(&se).map(|(b, s)| b / s).collect();
    let pv: Vec<f64> = t.iter().map(|&t| if t.is_nan() { f64::NAN } else { t_two_sided(t, df) }).collect();
    let r2 = 1.0 - ssr / sst;
    let mut terms = p.terms.clone();
    terms.push(CONSTANT.to_string());
    Ok(RegressionResult {
        name: String::new(),
        dependent: p.dependent.clone(),
        terms,
        coef,
        se,
        t,
        p: pv,
        omitted,
        n_obs: n,
        n_clusters,
        r2,
        adj_r2: 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - kf),
        within_r2: 1.0 - ssr / within_sst,
        absorbed,
        iterations,
        fixed_effects: FixedEffects {
            firm: p.firm.is_some(),
            quarter: p.quarter.is_some(),
        },
        se_kind,
        df,
        pseudo_r2: None,
        spec: None,
    })
}

fn scale(m: &Matrix, c: f64) -> Matrix {
    Matrix {
        n: m.n,
        data: m.data.iter().map(|v| v * c).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::spec::FixedEffects;
    use alloc::format;

    #[test]
    fn planted_slope_recovered() {
        let (nf, nq) = (6, 4);
        let mut f = Frame::new(nf * nq);
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut firm = Vec::new();
        let mut q = Vec::new();
        for i in 0..nf {
            for t in 0..nq {
                let xv = ((i * 7 + t * 3) % 5) as f64 + 0.1 * t as f64 * i as f64;
                x.push(xv);
                y.push(0.5 * xv + i as f64 * 2.0 - t as f64);
                firm.push(format!("f{i}"));
                q.push(format!("q{t}"));
            }
        }
        f.set_numeric("x", x);
        f.set_numeric("y", y);
        f.set_label("firm_id", firm);
        f.set_label("fiscal_quarter", q);
        let spec = RegressionSpec::new("t", "y", &["x"]).with_winsorize(None);
        let r = fe_ols(&spec, &f).unwrap();
        assert!((r.coef[0] - 0.5).abs() < 1e-10);
        assert_eq!(r.absorbed, nf + nq - 2);
        assert_eq!(r.n_clusters, Some(nf));
        let none = spec.with_fixed_effects(FixedEffects::NONE).with_se(SeKind::Classical);
        assert!(fe_ols(&none, &f).unwrap().coef[0] != 0.5);
    }

    #[test]
    fn components_counted() {
        let a = Levels {
            codes: vec![0, 1, 2],
            names: vec!["a".into(), "b".into(), "c".into()],
        };
        let b = Levels {
            codes: vec![0, 0, 1],
            names: vec!["x".into(), "y".into()],
        };
        assert_eq!(components(&a, &b), 2);
    }
}
