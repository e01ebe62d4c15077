//! Dense symmetric solves for the normal equations.

use alloc::vec;
use alloc::vec::Vec;

use super::StatsError;
use crate::math::sqrt;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// `X'WX` for column-major `cols`, with optional row weights.
    pub fn cross(cols: &[Vec<f64>], weights: Option<&[f64]>) -> Matrix {
        let k = cols.len();
        let mut m = Matrix::zeros(k);
        for a in 0..k {
            for b in a..k {
                let s: f64 = match weights {
                    Some(w) => cols[a].iter().zip(&cols[b]).zip(w).map(|((x, y), w)| x * y * w).sum(),
                    None => cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum(),
                };
                m.data[a * k + b] = s;
                m.data[b * k + a] = s;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `self · m · self` for symmetric `self`.
    pub fn sandwich(&self, m: &Matrix) -> Matrix {
        let n = self.n;
        let mut tmp = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                tmp.data[i * n + j] = (0..n).map(|l| self.get(i, l) * m.get(l, j)).sum();
            }
        }
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (0..n).map(|l| tmp.get(i, l) * self.get(l, j)).sum();
            }
        }
        out
    }
}

/// Share of a column's squared norm below which it counts as a linear
/// combination of the columns before it.
pub const COLLINEAR_TOL: f64 = 1e-11;

/// Flags the columns of `cols` that are linear combinations of columns
/// visited earlier, visiting them in `order` (modified Gram-Schmidt with
/// one reorthogonalization pass).
pub fn collinear_columns(cols: &[Vec<f64>], order: &[usize]) -> Vec<bool> {
    let mut flagged = vec![false; cols.len()];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &j in order {
        let mut v = cols[j].clone();
        let norm0: f64 = v.iter().map(|x| x * x).sum();
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, a)| *x -= d * a);
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum();
        if !(norm0 > 0.0) || !(norm > COLLINEAR_TOL * norm0) {
            flagged[j] = true;
            continue;
        }
        let r = sqrt(norm);
        v.iter_mut().for_each(|x| *x /= r);
        basis.push(v);
    }
    flagged
}

/// Lower Cholesky factor. Pivots below `1e-12` times the largest diagonal
/// entry are treated as rank deficiency.
pub fn cholesky(a: &Matrix) -> Result<Matrix, StatsError> {
    let n = a.n;
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    if n == 0 || !(scale > 0.0) {
        return Err(StatsError::SingularDesign);
    }
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 1e-12 * scale) {
            return Err(StatsError::SingularDesign);
        }
        let djj = sqrt(d);
        l.data[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.data[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L L' x = b`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.n;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.n;
    let mut inv = Matrix::zeros(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv.data[i * n + j] = col[i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_columns_flagged_in_visit_order() {
        let one = vec![1.0; 4];
        let x = vec![1.0, 2.0, 3.0, 5.0];
        let two_x_plus_one: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let zero = vec![0.0; 4];
        let cols = vec![x, two_x_plus_one, zero, one];
        assert_eq!(collinear_columns(&cols, &[3, 0, 1, 2]), vec![false, true, true, false]);
        assert_eq!(collinear_columns(&cols, &[1, 0, 3]), vec![false, false, false, true]);
    }

    #[test]
    fn solve_and_invert() {
        let a = Matrix {
            n: 3,
            data: vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0],
        };
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
        let inv = cholesky_inverse(&l);
        let id = a.sandwich(&inv);
        // A·A⁻¹·A == A
        for (u, v) in id.data.iter().zip(&a.data) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a = Matrix {
            n: 2,
            data: vec![1.0, 2.0, 2.0, 4.0],
        };
        assert_eq!(cholesky(&a), Err(StatsError::SingularDesign));
    }
}
