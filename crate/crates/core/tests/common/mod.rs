#![allow(dead_code)]

use nonanswer_core::stats::Frame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct PanelFixture {
    pub frame: Frame,
    pub firms: Vec<usize>,
    pub quarters: Vec<usize>,
    pub n_firms: usize,
    pub n_quarters: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Unbalanced random panel: every firm keeps at least two quarters and
/// quarter 0 is always present, so the firm-quarter graph is connected.
pub fn random_panel(seed: u64, n_firms: usize, n_quarters: usize, k: usize, noise: f64) -> PanelFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let firm_fx: Vec<f64> = (0..n_firms).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let quarter_fx: Vec<f64> = (0..n_quarters).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let betas: Vec<f64> = (0..k).map(|j| 0.5 + j as f64 * 0.25).collect();
    let (mut firms, mut quarters, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut x = vec![Vec::new(); k];
    for f in 0..n_firms {
        for q in 0..n_quarters {
            if q > 1 && rng.gen_bool(0.2) {
                continue;
            }
            let xs: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0) + 0.3 * firm_fx[f]).collect();
            let mut v = firm_fx[f] + quarter_fx[q] + rng.gen_range(-noise..=noise);
            for j in 0..k {
                v += betas[j] * xs[j];
                x[j].push(xs[j]);
            }
            firms.push(f);
            quarters.push(q);
            y.push(v);
        }
    }
    let mut frame = Frame::new(y.len());
    frame.set_numeric("y", y.clone());
    for (j, col) in x.iter().enumerate() {
        frame.set_numeric(&format!("x{j}"), col.clone());
    }
    frame.set_label("firm_id", firms.iter().map(|f| format!("F{f:03}")).collect());
    frame.set_label("fiscal_quarter", quarters.iter().map(|q| format!("Q{q:02}")).collect());
    PanelFixture {
        frame,
        firms,
        quarters,
        n_firms,
        n_quarters,
        x,
        y,
    }
}

/// Least squares via SVD on an explicit design (rows × cols).
pub fn lstsq(rows: usize, cols: usize, design: &[f64], y: &[f64]) -> Vec<f64> {
    let a = nalgebra::DMatrix::from_row_slice(rows, cols, design);
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    svd.solve(&b, 1e-12).expect("svd solve").iter().copied().collect()
}
