mod common;

use common::{lstsq, random_panel};
use nalgebra::{DMatrix, DVector};
use nonanswer_core::stats::spec::FixedEffects;
use nonanswer_core::stats::{fe_ols, logit, Frame, RegressionSpec, SeKind, StatsError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn spec(k: usize) -> RegressionSpec {
    let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    RegressionSpec::new("oracle", "y", &refs).with_winsorize(None)
}

#[test]
fn within_estimator_matches_dummy_ols() {
    for seed in 0..10u64 {
        let (nf, nq, k) = (5 + (seed as usize * 7) % 40, 3 + seed as usize % 9, 1 + seed as usize % 3);
        let p = random_panel(seed, nf, nq, k, 0.5);
        let r = fe_ols(&spec(k), &p.frame).unwrap();
        let cols = k + (nf - 1) + (nq - 1) + 1;
        let n = p.y.len();
        let mut design = Vec::with_capacity(n * cols);
        for i in 0..n {
            for j in 0..k {
                design.push(p.x[j][i]);
            }
            for f in 1..nf {
                design.push(f64::from(p.firms[i] == f));
            }
            for q in 1..nq {
                design.push(f64::from(p.quarters[i] == q));
            }
            design.push(1.0);
        }
        let b = lstsq(n, cols, &design, &p.y);
        for j in 0..k {
            assert!((r.coef[j] - b[j]).abs() < 1e-8, "seed {seed} coef {j}: {} vs {}", r.coef[j], b[j]);
        }
        // Residual sums of squares agree, so R² does too.
        let fitted = DMatrix::from_row_slice(n, cols, &design) * DVector::from_column_slice(&b);
        let ssr: f64 = p.y.iter().zip(fitted.iter()).map(|(y, f)| (y - f) * (y - f)).sum();
        let ybar = p.y.iter().sum::<f64>() / n as f64;
        let sst: f64 = p.y.iter().map(|y| (y - ybar) * (y - ybar)).sum();
        assert!((r.r2 - (1.0 - ssr / sst)).abs() < 1e-9);
        assert_eq!(r.absorbed, nf + nq - 2);
    }
}

#[test]
fn constant_is_mean_residual() {
    let p = random_panel(3, 12, 6, 2, 0.3);
    let r = fe_ols(&spec(2), &p.frame).unwrap();
    let n = p.y.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let expect = mean(&p.y) - r.coef[0] * mean(&p.x[0]) - r.coef[1] * mean(&p.x[1]);
    assert!((r.coef_of("Constant").unwrap() - expect).abs() < 1e-9);
}

#[test]
fn shifting_the_dependent_variable_keeps_slopes() {
    let p = random_panel(8, 15, 5, 2, 0.4);
    let base = fe_ols(&spec(2), &p.frame).unwrap();
    let mut f = p.frame.clone();
    f.set_numeric("y", p.y.iter().map(|v| v + 123.0).collect());
    let shifted = fe_ols(&spec(2), &f).unwrap();
    for j in 0..2 {
        assert!((base.coef[j] - shifted.coef[j]).abs() < 1e-9);
        assert!((base.se[j] - shifted.se[j]).abs() < 1e-9);
    }
}

#[test]
fn singleton_clusters_reduce_to_hc1() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 10;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.7 * v + rng.gen_range(-1.0..1.0) * v).collect();
    let mut f = Frame::new(n);
    f.set_numeric("x", x.clone());
    f.set_numeric("y", y.clone());
    f.set_label("id", (0..n).map(|i| i.to_string()).collect());
    let s = RegressionSpec::new("hc", "y", &["x"])
        .with_fixed_effects(FixedEffects::NONE)
        .with_cluster(Some("id"))
        .with_winsorize(None);
    let cr1 = fe_ols(&s, &f).unwrap();

    let xm = DMatrix::from_fn(n, 2, |i, j| if j == 0 { x[i] } else { 1.0 });
    let yv = DVector::from_column_slice(&y);
    let xtx_inv = (xm.transpose() * &xm).try_inverse().unwrap();
    let b = &xtx_inv * xm.transpose() * &yv;
    let e = &yv - &xm * &b;
    let meat = xm.transpose() * DMatrix::from_diagonal(&e.map(|v| v * v)) * &xm;
    let hc1 = (&xtx_inv * meat * &xtx_inv) * (n as f64 / (n as f64 - 2.0));
    for j in 0..2 {
        assert!((cr1.coef[j] - b[j]).abs() < 1e-10, "{} vs {}", cr1.coef[j], b[j]);
        assert!((cr1.se[j] - hc1[(j, j)].sqrt()).abs() < 1e-10);
    }
    let hc = fe_ols(&s.clone().with_se(SeKind::Hc1), &f).unwrap();
    assert!((hc.se[0] - cr1.se[0]).abs() < 1e-10);
}

#[test]
fn too_few_clusters() {
    let mut f = Frame::new(4);
    f.set_numeric("y", vec![1.0, 2.0, 3.0, 5.0]);
    f.set_numeric("x", vec![0.0, 1.0, 2.0, 3.0]);
    f.set_label("firm_id", vec!["a".into(); 4]);
    let s = RegressionSpec::new("c", "y", &["x"])
        .with_fixed_effects(FixedEffects::NONE)
        .with_winsorize(None);
    assert_eq!(fe_ols(&s, &f), Err(StatsError::TooFewClusters(1)));
}

fn irls(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let mut b = DVector::zeros(x.ncols());
    for _ in 0..100 {
        let eta = x * &b;
        let p = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let w = p.map(|v| v * (1.0 - v));
        let z = DVector::from_fn(y.len(), |i, _| eta[i] + (y[i] - p[i]) / w[i]);
        let xtw = x.transpose() * DMatrix::from_diagonal(&w);
        let next = (&xtw * x).try_inverse().unwrap() * (&xtw * z);
        if (&next - &b).norm() < 1e-14 {
            return next;
        }
        b = next;
    }
    b
}

#[test]
fn logit_matches_irls() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 300;
    let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let p = 1.0 / (1.0 + (-(-0.3 + 0.8 * x1[i] - 1.1 * x2[i])).exp());
            f64::from(rng.gen_bool(p))
        })
        .collect();
    let mut f = Frame::new(n);
    f.set_numeric("y", y.clone());
    f.set_numeric("x1", x1.clone());
    f.set_numeric("x2", x2.clone());
    let s = RegressionSpec::new("l", "y", &["x1", "x2"])
        .with_fixed_effects(FixedEffects::NONE)
        .with_cluster(None)
        .with_se(SeKind::Classical)
        .with_winsorize(None);
    let r = logit(&s, &f).unwrap();
    let xm = DMatrix::from_fn(n, 3, |i, j| [x1[i], x2[i], 1.0][j]);
    let b = irls(&xm, &DVector::from_column_slice(&y));
    for j in 0..3 {
        assert!((r.coef[j] - b[j]).abs() < 1e-6, "{j}: {} vs {}", r.coef[j], b[j]);
    }
    assert!(r.pseudo_r2.unwrap() > 0.0);
}

#[test]
fn t_tail_matches_statrs() {
    for df in [1.0, 2.5, 7.0, 30.0, 150.0, 4000.0] {
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        for t in [0.0, 0.3, 1.0, 1.96, 2.7, 5.0, 12.0] {
            let ours = nonanswer_core::stats::dist::t_two_sided(t, df);
            let theirs = 2.0 * (1.0 - dist.cdf(t));
            assert!((ours - theirs).abs() < 1e-9, "t={t} df={df}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn welch_against_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let normal = |rng: &mut ChaCha8Rng| {
        let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let a: Vec<f64> = (0..1000).map(|_| normal(&mut rng)).collect();
    let b: Vec<f64> = (0..1000).map(|_| 1.0 + normal(&mut rng)).collect();
    let t = nonanswer_core::stats::two_sample_t(&a, &b).unwrap();
    assert!((t.mean_diff + 1.0).abs() < 0.15);
    assert!(t.t_stat < -15.0);
    assert!(t.p < 1e-10);
}
