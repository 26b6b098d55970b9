//! Reproducing kernels of the Sobolev-type spaces `W₂⁵[0,1]` (with the four
//! homogeneous boundary constraints of the squeezing problem) and `W₂⁴[0,1]`.
//!
//! A kernel `K(x, y)` of a space of order `m` is, for fixed `y`, a polynomial
//! of degree `2m-1` in `x` on each side of `x = y`. Its piece coefficients
//! are fixed by a `4m × 4m` linear system:
//!
//! * at each endpoint, one row per derivative order `i < m`: either the space
//!   constraint `K^(i) = 0`, or the natural condition left over from
//!   integrating the inner product by parts,
//! * continuity of derivative orders `0..=2m-2` across `x = y`,
//! * a jump of `(-1)^m` in the derivative of order `2m-1`.
//!
//! Every piece coefficient is itself a polynomial of degree `2m-1` in `y`,
//! so solving the system at `2m` distinct nodes and interpolating recovers
//! the whole bivariate coefficient table exactly (up to rounding).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, Matrix};
use crate::poly::{self, falling, PiecewisePoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Zero,
    One,
}

impl Endpoint {
    pub fn x(self) -> f64 {
        match self {
            Endpoint::Zero => 0.0,
            Endpoint::One => 1.0,
        }
    }
}

/// A homogeneous boundary constraint `u^(derivative)(endpoint) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub derivative: usize,
    pub endpoint: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    order: usize,
    constraints: Vec<Constraint>,
}

impl SpaceSpec {
    pub fn new(order: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if !(4..=5).contains(&order) {
            return Err(Error::InvalidSpace(format!(
                "order {order} is not supported (expected 4 or 5)"
            )));
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.derivative >= order {
                return Err(Error::InvalidSpace(format!(
                    "constraint on derivative {} is not below the order {order}",
                    c.derivative
                )));
            }
            if constraints[..i].contains(c) {
                return Err(Error::InvalidSpace(format!("duplicate constraint {c:?}")));
            }
        }
        Ok(Self { order, constraints })
    }

    /// `W₂⁵[0,1]` with `u(0) = u(1) = u'(1) = u''(0) = 0`.
    pub fn w25() -> Self {
        let c = |derivative, endpoint| Constraint {
            derivative,
            endpoint,
        };
        Self {
            order: 5,
            constraints: vec![
                c(0, Endpoint::Zero),
                c(0, Endpoint::One),
                c(1, Endpoint::One),
                c(2, Endpoint::Zero),
            ],
        }
    }

    /// Unconstrained `W₂⁴[0,1]`.
    pub fn w24() -> Self {
        Self {
            order: 4,
            constraints: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_constrained(&self, derivative: usize, endpoint: Endpoint) -> bool {
        self.constraints.contains(&Constraint {
            derivative,
            endpoint,
        })
    }

    /// Number of polynomial coefficients per kernel piece.
    pub fn piece_len(&self) -> usize {
        2 * self.order
    }

    pub fn name(&self) -> String {
        if *self == Self::w25() {
            "w25".into()
        } else if *self == Self::w24() {
            "w24".into()
        } else {
            format!("W2^{}{:?}", self.order, self.constraints)
        }
    }
}

/// `K(x, y) = Σ lower[a][b] xᵃ yᵇ` on `x ≤ y`; `x > y` is read through
/// symmetry. `upper` holds the independently interpolated `x > y` table
/// (`K(x,y) = Σ upper[a][b] xᵃ yᵇ` there), kept for verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateKernel {
    pub order: usize,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl BivariateKernel {
    fn size(&self) -> usize {
        2 * self.order
    }

    /// Highest total derivative order that is continuous across `x = y`.
    pub fn smooth_order(&self) -> usize {
        2 * self.order - 2
    }

    /// `∂ₓ^dx ∂_y^dy K(x, y)`.
    pub fn eval(&self, x: f64, y: f64, dx: usize, dy: usize) -> Result<f64> {
        if x == y && dx + dy > self.smooth_order() {
            return Err(Error::DerivativeAtJump {
                dx,
                dy,
                at: x,
                max: self.smooth_order(),
            });
        }
        Ok(if x <= y {
            table_eval(&self.lower, x, y, dx, dy)
        } else {
            table_eval(&self.lower, y, x, dy, dx)
        })
    }

    /// Evaluates the `x ≤ y` formula regardless of where `(x, y)` lies.
    pub fn eval_lower_formula(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        table_eval(&self.lower, x, y, dx, dy)
    }

    /// Evaluates the independently derived `x > y` formula regardless of region.
    pub fn eval_upper_formula(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        table_eval(&self.upper, x, y, dx, dy)
    }

    /// Piece coefficients `(c(y), d(y))` of `K(·, y)` in powers of `x`,
    /// re-expanded from the lower and upper tables.
    pub fn coefficients_at(&self, y: f64) -> (Vec<f64>, Vec<f64>) {
        let c = self.lower.iter().map(|row| poly::eval(row, y)).collect();
        let d = self.upper.iter().map(|row| poly::eval(row, y)).collect();
        (c, d)
    }

    /// `∂_y^dy K(·, y)` as a piecewise polynomial in `x` with breakpoint `y`.
    pub fn slice(&self, y: f64, dy: usize) -> PiecewisePoly {
        let n = self.size();
        let lower = (0..n)
            .map(|a| poly::eval_deriv(&self.lower[a], y, dy))
            .collect();
        let upper = (0..n)
            .map(|b| {
                (0..n)
                    .map(|a| self.lower[a][b] * falling(a, dy) * pow_or_zero(y, a, dy))
                    .sum()
            })
            .collect();
        PiecewisePoly::new(y, lower, upper)
    }
}

fn pow_or_zero(x: f64, i: usize, k: usize) -> f64 {
    if k > i {
        0.0
    } else {
        x.powi((i - k) as i32)
    }
}

fn table_eval(t: &[Vec<f64>], x: f64, y: f64, dx: usize, dy: usize) -> f64 {
    let mut acc = 0.0;
    for (a, row) in t.iter().enumerate().skip(dx) {
        let inner = poly::eval_deriv(row, y, dy);
        acc += inner * falling(a, dx) * pow_or_zero(x, a, dx);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum At {
    Point(f64),
    Diagonal,
}

/// One row of the kernel condition system: `Σ coef · piece^(deriv)(at) = rhs`.
#[derive(Debug, Clone)]
struct Condition {
    at: At,
    terms: Vec<(Piece, usize, f64)>,
    rhs: f64,
}

impl Condition {
    fn at_point(x: f64, piece: Piece, terms: &[(usize, f64)]) -> Self {
        Self {
            at: At::Point(x),
            terms: terms.iter().map(|&(k, c)| (piece, k, c)).collect(),
            rhs: 0.0,
        }
    }

    fn across(k: usize, rhs: f64) -> Self {
        Self {
            at: At::Diagonal,
            terms: vec![(Piece::Upper, k, 1.0), (Piece::Lower, k, -1.0)],
            rhs,
        }
    }
}

fn natural_conditions(spec: &SpaceSpec) -> Vec<Condition> {
    let m = spec.order;
    let top = 2 * m - 1;
    let mut rows = Vec::with_capacity(4 * m);
    for i in 0..m {
        // Boundary term u^(i)(0)·[K^(i)(0) - (-1)^(m-1-i) K^(2m-1-i)(0)].
        if spec.is_constrained(i, Endpoint::Zero) {
            rows.push(Condition::at_point(0.0, Piece::Lower, &[(i, 1.0)]));
        } else {
            let sign = if (m - 1 - i) % 2 == 0 { 1.0 } else { -1.0 };
            rows.push(Condition::at_point(
                0.0,
                Piece::Lower,
                &[(i, 1.0), (top - i, -sign)],
            ));
        }
    }
    for i in 0..m {
        // Boundary term ±u^(i)(1)·K^(2m-1-i)(1).
        let k = if spec.is_constrained(i, Endpoint::One) {
            i
        } else {
            top - i
        };
        rows.push(Condition::at_point(1.0, Piece::Upper, &[(k, 1.0)]));
    }
    for k in 0..top {
        rows.push(Condition::across(k, 0.0));
    }
    let jump = if m % 2 == 0 { 1.0 } else { -1.0 };
    rows.push(Condition::across(top, jump));
    rows
}

/// The condition lists written out literally for the two supported spaces.
fn listed_conditions(spec: &SpaceSpec) -> Result<Vec<Condition>> {
    use Piece::*;
    let (mut rows, top, jump) = if *spec == SpaceSpec::w25() {
        let rows = vec![
            Condition::at_point(0.0, Lower, &[(1, 1.0), (8, 1.0)]),
            Condition::at_point(0.0, Lower, &[(3, 1.0), (6, 1.0)]),
            Condition::at_point(0.0, Lower, &[(4, 1.0), (5, -1.0)]),
            Condition::at_point(1.0, Upper, &[(5, 1.0)]),
            Condition::at_point(1.0, Upper, &[(6, 1.0)]),
            Condition::at_point(1.0, Upper, &[(7, 1.0)]),
            Condition::at_point(0.0, Lower, &[(0, 1.0)]),
            Condition::at_point(1.0, Upper, &[(0, 1.0)]),
            Condition::at_point(1.0, Upper, &[(1, 1.0)]),
            Condition::at_point(0.0, Lower, &[(2, 1.0)]),
        ];
        (rows, 9, -1.0)
    } else if *spec == SpaceSpec::w24() {
        let rows = vec![
            Condition::at_point(0.0, Lower, &[(0, 1.0), (7, 1.0)]),
            Condition::at_point(0.0, Lower, &[(1, 1.0), (6, -1.0)]),
            Condition::at_point(0.0, Lower, &[(2, 1.0), (5, 1.0)]),
            Condition::at_point(0.0, Lower, &[(3, 1.0), (4, -1.0)]),
            Condition::at_point(1.0, Upper, &[(4, 1.0)]),
            Condition::at_point(1.0, Upper, &[(5, 1.0)]),
            Condition::at_point(1.0, Upper, &[(6, 1.0)]),
            Condition::at_point(1.0, Upper, &[(7, 1.0)]),
        ];
        (rows, 7, 1.0)
    } else {
        return Err(Error::InvalidSpace(format!(
            "no listed condition system for {}",
            spec.name()
        )));
    };
    for k in 0..top {
        rows.push(Condition::across(k, 0.0));
    }
    rows.push(Condition::across(top, jump));
    Ok(rows)
}

/// Builds and solves the condition system at `y`. Unknowns are
/// `[c_0..c_{2m-1}, d_0..d_{2m-1}]`.
fn solve_conditions(conds: &[Condition], pieces: usize, y: f64) -> Result<Vec<f64>> {
    let n = 2 * pieces;
    assert_eq!(conds.len(), n, "condition count must match unknown count");
    let mut a = Matrix::zeros(n);
    let mut b = vec![0.0; n];
    for (r, cond) in conds.iter().enumerate() {
        let x = match cond.at {
            At::Point(x) => x,
            At::Diagonal => y,
        };
        for &(piece, k, coef) in &cond.terms {
            let offset = match piece {
                Piece::Lower => 0,
                Piece::Upper => pieces,
            };
            for i in k..pieces {
                a[(r, offset + i)] += coef * falling(i, k) * pow_or_zero(x, i, k);
            }
        }
        b[r] = cond.rhs;
    }
    lu_solve(&a, &b, &format!("kernel conditions at y = {y}"))
}

/// Chebyshev points of the first kind mapped into `(0.05, 0.95)`.
pub fn interpolation_nodes(count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| {
            let t = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos();
            0.5 + 0.45 * t
        })
        .collect()
}

pub fn derive_kernel(spec: &SpaceSpec) -> Result<BivariateKernel> {
    derive_kernel_with_nodes(spec, &interpolation_nodes(spec.piece_len()))
}

/// [`derive_kernel`] with caller-chosen interpolation nodes in `(0, 1)`.
pub fn derive_kernel_with_nodes(spec: &SpaceSpec, nodes: &[f64]) -> Result<BivariateKernel> {
    let pieces = spec.piece_len();
    if nodes.len() != pieces {
        return Err(Error::InvalidSpace(format!(
            "need {pieces} interpolation nodes, got {}",
            nodes.len()
        )));
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].iter().any(|b| (a - b).abs() < 1e-12) {
            return Err(Error::NodesNotDistinct);
        }
    }

    let conds = natural_conditions(spec);
    let samples = nodes
        .iter()
        .map(|&y| solve_conditions(&conds, pieces, y))
        .collect::<Result<Vec<_>>>()?;

    let vandermonde = Matrix::from_fn(pieces, |j, b| nodes[j].powi(b as i32));
    let mut tables = Vec::with_capacity(2 * pieces);
    for q in 0..2 * pieces {
        let values: Vec<f64> = samples.iter().map(|s| s[q]).collect();
        tables.push(lu_solve(&vandermonde, &values, "coefficient interpolation")?);
    }
    let upper = tables.split_off(pieces);
    Ok(BivariateKernel {
        order: spec.order,
        lower: tables,
        upper,
    })
}

/// Solves the literally listed condition system at a single `y`, returning
/// the lower (`x ≤ y`) and upper (`x > y`) piece coefficients in powers of `x`.
pub fn kernel_system_oracle(spec: &SpaceSpec, y: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let conds = listed_conditions(spec)?;
    let pieces = spec.piece_len();
    let mut z = solve_conditions(&conds, pieces, y)?;
    let d = z.split_off(pieces);
    Ok((z, d))
}

/// `Σ_{i<m} u^(i)(0) v^(i)(0) + ∫₀¹ u^(m) v^(m) dx`, integrated exactly piece by piece.
pub fn inner_product(spec: &SpaceSpec, u: &PiecewisePoly, v: &PiecewisePoly) -> f64 {
    let m = spec.order;
    let boundary: f64 = (0..m).map(|i| u.eval_deriv(0.0, i) * v.eval_deriv(0.0, i)).sum();

    let du = u.derivative(m);
    let dv = v.derivative(m);
    let mut cuts = vec![0.0, 1.0, u.breakpoint.clamp(0.0, 1.0), v.breakpoint.clamp(0.0, 1.0)];
    cuts.sort_by(f64::total_cmp);
    let integral: f64 = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            poly::integrate(&poly::mul(du.piece_at(mid), dv.piece_at(mid)), w[0], w[1])
        })
        .sum();
    boundary + integral
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_validation() {
        assert!(SpaceSpec::new(3, vec![]).is_err());
        let c = Constraint {
            derivative: 5,
            endpoint: Endpoint::Zero,
        };
        assert!(SpaceSpec::new(5, vec![c]).is_err());
        let c = Constraint {
            derivative: 1,
            endpoint: Endpoint::Zero,
        };
        assert!(SpaceSpec::new(5, vec![c, c]).is_err());
        assert_eq!(SpaceSpec::new(4, vec![]).unwrap(), SpaceSpec::w24());
        assert_eq!(SpaceSpec::w25().name(), "w25");
    }

    #[test]
    fn natural_conditions_match_listed_ones() {
        // Same rows up to ordering for the two supported spaces.
        for spec in [SpaceSpec::w25(), SpaceSpec::w24()] {
            let y = 0.37;
            let pieces = spec.piece_len();
            let a = solve_conditions(&natural_conditions(&spec), pieces, y).unwrap();
            let b = solve_conditions(&listed_conditions(&spec).unwrap(), pieces, y).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-12 * q.abs().max(1e-6), "{p} vs {q}");
            }
        }
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let mut nodes = interpolation_nodes(10);
        nodes[3] = nodes[4];
        assert_eq!(
            derive_kernel_with_nodes(&SpaceSpec::w25(), &nodes),
            Err(Error::NodesNotDistinct)
        );
        assert!(derive_kernel_with_nodes(&SpaceSpec::w25(), &nodes[..9]).is_err());
    }

    #[test]
    fn w25_top_coefficient_of_upper_piece() {
        let k = derive_kernel(&SpaceSpec::w25()).unwrap();
        for y in [0.2, 0.5, 0.9] {
            let (_, d) = k.coefficients_at(y);
            let expect = y.powi(9) / 362880.0;
            assert!((d[0] - expect).abs() <= 1e-15, "{} vs {expect}", d[0]);
        }
    }

    #[test]
    fn w25_vanishes_at_origin() {
        let k = derive_kernel(&SpaceSpec::w25()).unwrap();
        for y in [0.0, 0.1, 0.6, 1.0] {
            assert!(k.eval(0.0, y, 0, 0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn w24_constant_term() {
        let k = derive_kernel(&SpaceSpec::w24()).unwrap();
        assert!((k.eval(0.0, 0.3, 0, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w24_first_partial() {
        let k = derive_kernel(&SpaceSpec::w24()).unwrap();
        let (x, y): (f64, f64) = (0.2, 0.7);
        // d/dx of the closed-form x ≤ y branch.
        let expect = y + 0.5 * y * y * x + y.powi(3) * x * x / 12.0 + y.powi(3) * x.powi(3) / 36.0
            - y * y * x.powi(4) / 48.0
            + y * x.powi(5) / 120.0
            - x.powi(6) / 720.0;
        assert!((k.eval(x, y, 1, 0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn diagonal_continuity_and_jump() {
        let k = derive_kernel(&SpaceSpec::w25()).unwrap();
        let y = 0.4;
        let lo = k.eval_lower_formula(y, y, 0, 0);
        let hi = k.eval_upper_formula(y, y, 0, 0);
        assert!((lo - hi).abs() < 1e-15);
        assert_eq!(k.eval(y, y, 0, 0).unwrap(), lo);

        // Top-order derivatives of the interpolated coefficients lose ~8 digits.
        let slice = k.slice(0.5, 0);
        assert!((slice.jump(9) + 1.0).abs() < 1e-7);
        let slice = derive_kernel(&SpaceSpec::w24()).unwrap().slice(0.5, 0);
        assert!((slice.jump(7) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn derivative_at_jump_is_an_error() {
        let k = derive_kernel(&SpaceSpec::w25()).unwrap();
        assert!(k.eval(0.5, 0.5, 8, 0).is_ok());
        assert!(k.eval(0.5, 0.5, 4, 4).is_ok());
        assert!(matches!(
            k.eval(0.5, 0.5, 9, 0),
            Err(Error::DerivativeAtJump { .. })
        ));
        assert!(k.eval(0.5, 0.6, 9, 0).is_ok());
    }

    #[test]
    fn oracle_structural_zeros() {
        for y in [0.1, 0.5, 0.77] {
            let (c, _) = kernel_system_oracle(&SpaceSpec::w25(), y).unwrap();
            assert_eq!(c[0], 0.0);
            assert!(c[2].abs() < 1e-18);
        }
        let (_, d) = kernel_system_oracle(&SpaceSpec::w25(), 0.5).unwrap();
        let expect = 0.5f64.powi(9) / 362880.0;
        assert!((d[0] - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn oracle_rejects_other_spaces() {
        let spec = SpaceSpec::new(5, vec![]).unwrap();
        assert!(kernel_system_oracle(&spec, 0.5).is_err());
        // the generic derivation still handles it
        assert!(derive_kernel(&spec).is_ok());
    }

    #[test]
    fn inner_product_of_member() {
        let u = PiecewisePoly::from_poly(vec![0.0, 1.0, 0.0, -3.0, 2.0]);
        let s = SpaceSpec::w25();
        assert!((inner_product(&s, &u, &u) - 2629.0).abs() < 1e-10);
        let zero = PiecewisePoly::from_poly(vec![0.0]);
        assert_eq!(inner_product(&s, &u, &zero), 0.0);
    }

    #[test]
    fn reproduces_member_value() {
        let spec = SpaceSpec::w25();
        let k = derive_kernel(&spec).unwrap();
        let u = PiecewisePoly::from_poly(vec![0.0, 1.0, 0.0, -3.0, 2.0]);
        let got = inner_product(&spec, &u, &k.slice(0.5, 0));
        assert!((got - 0.25).abs() < 1e-10, "{got}");
    }
}
