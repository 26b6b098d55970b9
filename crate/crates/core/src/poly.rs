//! Dense univariate polynomials in the monomial basis and two-piece
//! piecewise polynomials on `[0, 1]`.
//!
//! Coefficient slices are stored lowest degree first: `c[i]` multiplies `x^i`.

use serde::{Deserialize, Serialize};

/// `i (i-1) ... (i-k+1)`, the factor picked up by `x^i` under `k` derivatives.
pub fn falling(i: usize, k: usize) -> f64 {
    if k > i {
        return 0.0;
    }
    ((i - k + 1)..=i).fold(1.0, |acc, v| acc * v as f64)
}

/// Horner evaluation.
pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Value of the `k`-th derivative at `x`.
pub fn eval_deriv(c: &[f64], x: f64, k: usize) -> f64 {
    if k >= c.len() {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in (k..c.len()).rev() {
        acc = acc * x + c[i] * falling(i, k);
    }
    acc
}

pub fn derivative(c: &[f64], k: usize) -> Vec<f64> {
    if k >= c.len() {
        return vec![0.0];
    }
    (k..c.len()).map(|i| c[i] * falling(i, k)).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Exact `∫_lo^hi p(x) dx`.
pub fn integrate(c: &[f64], lo: f64, hi: f64) -> f64 {
    let anti = |x: f64| {
        c.iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + a / (i + 1) as f64)
            * x
    };
    anti(hi) - anti(lo)
}

/// A function on `[0, 1]` that is polynomial on `[0, breakpoint]` and on
/// `(breakpoint, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    pub breakpoint: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PiecewisePoly {
    pub fn new(breakpoint: f64, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            breakpoint,
            lower,
            upper,
        }
    }

    /// A single polynomial viewed as piecewise (both pieces identical).
    pub fn from_poly(c: Vec<f64>) -> Self {
        Self {
            breakpoint: 1.0,
            upper: c.clone(),
            lower: c,
        }
    }

    /// The piece active at `x`: lower on `[0, breakpoint]`, upper beyond.
    pub fn piece_at(&self, x: f64) -> &[f64] {
        if x <= self.breakpoint {
            &self.lower
        } else {
            &self.upper
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval(self.piece_at(x), x)
    }

    pub fn eval_deriv(&self, x: f64, k: usize) -> f64 {
        eval_deriv(self.piece_at(x), x, k)
    }

    pub fn derivative(&self, k: usize) -> PiecewisePoly {
        PiecewisePoly {
            breakpoint: self.breakpoint,
            lower: derivative(&self.lower, k),
            upper: derivative(&self.upper, k),
        }
    }

    /// `upper^(k)(b) - lower^(k)(b)` at the breakpoint `b`.
    pub fn jump(&self, k: usize) -> f64 {
        let b = self.breakpoint;
        eval_deriv(&self.upper, b, k) - eval_deriv(&self.lower, b, k)
    }

    pub fn degree(&self) -> usize {
        self.lower.len().max(self.upper.len()).saturating_sub(1)
    }
}
