//! Small dense linear algebra: row-major square matrices and LU with
//! partial pivoting. Every system in this crate is at most a few dozen rows.

use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Relative pivot size below which a row-equilibrated system is treated as singular.
const PIVOT_FLOOR: f64 = 1e-13;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Rows are equilibrated to unit max-norm first so the singularity test is
/// scale-free; one step of iterative refinement is applied.
pub fn lu_solve(a: &Matrix, b: &[f64], context: &str) -> Result<Vec<f64>> {
    let n = a.dim();
    assert_eq!(b.len(), n, "rhs length mismatch");
    let singular = || Error::SingularSystem {
        context: context.to_string(),
    };

    let mut scaled = a.clone();
    let mut rhs = b.to_vec();
    for i in 0..n {
        let s = a.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if s == 0.0 || !s.is_finite() {
            return Err(singular());
        }
        for j in 0..n {
            scaled[(i, j)] /= s;
        }
        rhs[i] /= s;
    }

    let mut lu = scaled.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if pmax < PIVOT_FLOOR {
            return Err(singular());
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
    }

    let apply = |r: &[f64]| -> Vec<f64> {
        let mut y: Vec<f64> = perm.iter().map(|&p| r[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                y[i] -= lu[(i, j)] * y[j];
            }
            y[i] /= lu[(i, i)];
        }
        y
    };

    let mut x = apply(&rhs);
    let ax = scaled.mul_vec(&x);
    let resid: Vec<f64> = rhs.iter().zip(&ax).map(|(r, v)| r - v).collect();
    let dx = apply(&resid);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Matrix::from_fn(3, |i, j| [[2.0, 1.0, 1.0], [4.0, -6.0, 0.0], [-2.0, 7.0, 2.0]][i][j]);
        let x = lu_solve(&a, &[5.0, -2.0, 9.0], "test").unwrap();
        for (v, e) in x.iter().zip([1.0, 1.0, 2.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn needs_pivoting() {
        let a = Matrix::from_fn(2, |i, j| [[0.0, 1.0], [1.0, 0.0]][i][j]);
        let x = lu_solve(&a, &[3.0, 4.0], "test").unwrap();
        assert_eq!(x, vec![4.0, 3.0]);
    }

    #[test]
    fn detects_singular() {
        let a = Matrix::from_fn(2, |i, j| [[1.0, 2.0], [2.0, 4.0]][i][j]);
        assert!(matches!(
            lu_solve(&a, &[1.0, 2.0], "test"),
            Err(Error::SingularSystem { .. })
        ));
        assert!(lu_solve(&Matrix::zeros(2), &[0.0, 0.0], "test").is_err());
    }

    #[test]
    fn products() {
        let a = Matrix::from_fn(2, |i, j| (i * 2 + j) as f64);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![1.0, 5.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 1.0]), vec![2.0, 4.0]);
        assert_eq!(a.matmul(&Matrix::identity(2)), a);
        assert_eq!(a.transpose()[(0, 1)], 2.0);
    }
}
