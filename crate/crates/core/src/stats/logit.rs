//! Binary logit by damped Newton-Raphson.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::dist::normal_two_sided;
use super::linalg::{cholesky, cholesky_inverse, cholesky_solve, collinear_columns, Matrix};
use super::ols::{RegressionResult, CONSTANT};
use super::spec::{prepare, Levels, SeKind};
use super::{Frame, RegressionSpec, StatsError};
use crate::math::{exp, ln, ln1p, sqrt};

pub const GRAD_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 100;
/// Linear predictors beyond this magnitude indicate separation.
const ETA_LIMIT: f64 = 30.0;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + ln1p(exp(-z))
    } else {
        ln1p(exp(z))
    }
}

fn loglik(design: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| {
            let eta: f64 = design.iter().zip(beta).map(|(c, b)| c[i] * b).sum();
            y[i] * eta - softplus(eta)
        })
        .sum()
}

fn dummies(levels: &Levels, prefix: &str) -> Vec<(String, Vec<f64>)> {
    (1..levels.n_levels())
        .map(|l| {
            let col = levels.codes.iter().map(|&c| if c as usize == l { 1.0 } else { 0.0 }).collect();
            (format!("{prefix}[{}]", levels.names[l]), col)
        })
        .collect()
}

/// Logit of a 0/1 dependent variable. Fixed effects enter as dummy
/// columns; errors are clustered (G/(G-1)) when the spec clusters, else the
/// inverse information matrix is used.
pub fn logit(spec: &RegressionSpec, frame: &Frame) -> Result<RegressionResult, StatsError> {
    let p = prepare(spec, frame, &[])?;
    if p.y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(StatsError::InvalidSpec(format!("`{}` is not binary", spec.dependent)));
    }
    let n = p.n();
    let mut names = p.terms.clone();
    let mut design = p.x.clone();
    for (lv, prefix) in [(&p.firm, "firm"), (&p.quarter, "quarter")] {
        if let Some(lv) = lv {
            for (name, col) in dummies(lv, prefix) {
                names.push(name);
                design.push(col);
            }
        }
    }
    names.push(CONSTANT.to_string());
    design.push(vec![1.0; n]);
    let full = design.len();
    // Regressors that the dummies absorb are omitted rather than the dummies.
    let n_x = p.x.len();
    let order: Vec<usize> = core::iter::once(full - 1).chain(n_x..full - 1).chain(0..n_x).collect();
    let flagged = collinear_columns(&design, &order);
    let kept: Vec<usize> = (0..full).filter(|&j| !flagged[j]).collect();
    let omitted: Vec<String> = (0..n_x).filter(|&j| flagged[j]).map(|j| names[j].clone()).collect();
    let design: Vec<Vec<f64>> = kept.iter().map(|&j| core::mem::take(&mut design[j])).collect();
    let k = design.len();
    if n <= k {
        return Err(StatsError::SingularDesign);
    }

    let mut beta = vec![0.0; k];
    let mut ll = loglik(&design, &p.y, &beta);
    let mut converged = false;
    let mut hessian_l = None;
    for iter in 0..MAX_ITER {
        let mut w = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 0..n {
            let eta: f64 = design.iter().zip(&beta).map(|(c, b)| c[i] * b).sum();
            let pr = sigmoid(eta);
            w[i] = pr * (1.0 - pr);
            r[i] = p.y[i] - pr;
        }
        let grad: Vec<f64> = design.iter().map(|c| c.iter().zip(&r).map(|(a, b)| a * b).sum()).collect();
        let info = Matrix::cross(&design, Some(&w));
        let l = cholesky(&info).map_err(|_| if iter == 0 { StatsError::SingularDesign } else { StatsError::Separation })?;
        let gnorm = sqrt(grad.iter().map(|g| g * g).sum());
        if gnorm < GRAD_TOL {
            converged = true;
            hessian_l = Some(l);
            break;
        }
        let step = cholesky_solve(&l, &grad);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let cl = loglik(&design, &p.y, &cand);
            if cl >= ll - 1e-12 * ll.abs() || t < 1e-8 {
                beta = cand;
                ll = cl;
                break;
            }
            t *= 0.5;
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(StatsError::NonConvergence(MAX_ITER));
        }
    }
    let max_eta = (0..n)
        .map(|i| design.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>().abs())
        .fold(0.0, f64::max);
    if max_eta > ETA_LIMIT {
        return Err(StatsError::Separation);
    }
    let l = match (converged, hessian_l) {
        (true, Some(l)) => l,
        _ => return Err(StatsError::NonConvergence(MAX_ITER)),
    };
    let inv = cholesky_inverse(&l);

    let (cov, n_clusters) = match (&p.cluster, spec.se) {
        (Some(cl), SeKind::Cr1 | SeKind::Cr0) => {
            let g = cl.n_levels();
            if g < 2 {
                return Err(StatsError::TooFewClusters(g));
            }
            let mut scores = vec![vec![0.0; k]; g];
            for i in 0..n {
                let eta: f64 = design.iter().zip(&beta).map(|(c, b)| c[i] * b).sum();
                let r = p.y[i] - sigmoid(eta);
                let s = &mut scores[cl.codes[i] as usize];
                for (j, c) in design.iter().enumerate() {
                    s[j] += c[i] * r;
                }
            }
            let mut meat = Matrix::zeros(k);
            for s in &scores {
                for a in 0..k {
                    for b in 0..k {
                        meat.add(a, b, s[a] * s[b]);
                    }
                }
            }
            let c = g as f64 / (g as f64 - 1.0);
            let mut v = inv.sandwich(&meat);
            v.data.iter_mut().for_each(|x| *x *= c);
            (v, Some(g))
        }
        _ => (inv, None),
    };
    let ybar = p.y.iter().sum::<f64>() / n as f64;
    let ll0 = n as f64 * (ybar * ln(ybar.max(1e-300)) + (1.0 - ybar) * ln((1.0 - ybar).max(1e-300)));
    let mut coef = vec![f64::NAN; full];
    let mut se = vec![f64::NAN; full];
    for (a, &j) in kept.iter().enumerate() {
        coef[j] = beta[a];
        se[j] = sqrt(cov.get(a, a).max(0.0));
    }
    let z: Vec<f64> = coef.iter().zip(&se).map(|(b, s)| b / s).collect();
    let pv = z.iter().map(|&z| if z.is_nan() { f64::NAN } else { normal_two_sided(z) }).collect();
    let pseudo = if ll0 < 0.0 { 1.0 - ll / ll0 } else { 0.0 };
    Ok(RegressionResult {
        name: spec.name.clone(),
        dependent: spec.dependent.clone(),
        terms: names,
        coef,
        se,
        t: z,
        p: pv,
        omitted,
        n_obs: n,
        n_clusters,
        r2: pseudo,
        adj_r2: f64::NAN,
        within_r2: f64::NAN,
        absorbed: 0,
        iterations: 0,
        fixed_effects: spec.fixed_effects,
        se_kind: spec.se,
        df: f64::INFINITY,
        pseudo_r2: Some(pseudo),
        spec: Some(spec.clone()),
    })
}
