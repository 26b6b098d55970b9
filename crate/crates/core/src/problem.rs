//! The squeezing-flow boundary value problem
//!
//! ```text
//! F'''' - m² F'' + Re F F''' = 0,   F(0) = F''(0) = 0,  F(1) = 1,  F'(1) = 0
//! ```
//!
//! homogenized as `F = u + g` with a lift `g` that carries all four boundary
//! values. The remainder `u` then satisfies `L u = M(x, u, u''')` with
//! homogeneous conditions, where
//!
//! ```text
//! L u = u'''' + Re g u''' - m² u'' + Re g''' u
//! M   = -Re u u''' - Re g g''' - g'''' + m² g''
//! ```
//!
//! `homogenizer`, `operator_l` and `rhs_m` use `g(x) = e^(x-1) x (x-2)²`;
//! the `*_lifted` variants take any [`Lift`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Nondimensional Hartmann number `m` and Reynolds number `re`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub m: f64,
    pub re: f64,
}

impl ProblemParams {
    pub fn new(m: f64, re: f64) -> Result<Self> {
        if !m.is_finite() || !re.is_finite() {
            return Err(Error::InvalidParams(format!(
                "m and re must be finite (got m={m}, re={re})"
            )));
        }
        if m < 0.0 {
            return Err(Error::InvalidParams(format!(
                "the Hartmann number m must be nonnegative (got {m})"
            )));
        }
        Ok(Self { m, re })
    }

    pub fn m2(&self) -> f64 {
        self.m * self.m
    }
}

/// Values `f(x), f'(x), …, f''''(x)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeJet {
    pub x: f64,
    pub values: [f64; 5],
}

impl DerivativeJet {
    pub fn new(x: f64, values: [f64; 5]) -> Self {
        Self { x, values }
    }

    pub fn from_fn(x: f64, f: impl Fn(usize) -> f64) -> Self {
        Self {
            x,
            values: std::array::from_fn(f),
        }
    }

    pub fn d(&self, k: usize) -> f64 {
        self.values[k]
    }
}

impl std::ops::Add for DerivativeJet {
    type Output = DerivativeJet;
    fn add(self, rhs: DerivativeJet) -> DerivativeJet {
        debug_assert_eq!(self.x, rhs.x);
        DerivativeJet::from_fn(self.x, |k| self.values[k] + rhs.values[k])
    }
}

/// Polynomial factor `p_k` with `g^(k)(x) = e^(x-1) p_k(x)`, expanded by the
/// product rule `p_{k+1} = p_k + p_k'`.
pub fn homogenizer_factor(k: usize) -> Vec<f64> {
    let mut p = vec![0.0, 4.0, -4.0, 1.0];
    for _ in 0..k {
        let dp = poly::derivative(&p, 1);
        for (a, b) in p.iter_mut().zip(dp.iter().chain(std::iter::repeat(&0.0))) {
            *a += b;
        }
    }
    p
}

/// `g^(k)(x)` for any `k`.
pub fn homogenizer_deriv(x: f64, k: usize) -> f64 {
    (x - 1.0).exp() * poly::eval(&homogenizer_factor(k), x)
}

/// The lift `g` and its first four derivatives at `x`.
pub fn homogenizer(x: f64) -> DerivativeJet {
    let e = (x - 1.0).exp();
    let mut p = vec![0.0, 4.0, -4.0, 1.0];
    let mut values = [0.0; 5];
    for v in values.iter_mut() {
        *v = e * poly::eval(&p, x);
        let dp = poly::derivative(&p, 1);
        for (a, b) in p.iter_mut().zip(dp.iter().chain(std::iter::repeat(&0.0))) {
            *a += b;
        }
    }
    DerivativeJet { x, values }
}

/// A boundary-condition lift `g`: any smooth function with
/// `g(0) = g''(0) = 0`, `g(1) = 1`, `g'(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Lift {
    /// `e^(x-1) x (x-2)²`, the lift behind the operator coefficients above.
    #[serde(rename = "exp")]
    Exponential,
    /// `(3x - x³)/2`, the Stokes profile. Its derivatives above the third vanish.
    #[default]
    #[serde(rename = "cubic")]
    Cubic,
}

const CUBIC_LIFT: [f64; 4] = [0.0, 1.5, 0.0, -0.5];

impl Lift {
    pub fn deriv(self, x: f64, k: usize) -> f64 {
        match self {
            Lift::Exponential => homogenizer_deriv(x, k),
            Lift::Cubic => poly::eval_deriv(&CUBIC_LIFT, x, k),
        }
    }

    pub fn jet(self, x: f64) -> DerivativeJet {
        match self {
            Lift::Exponential => homogenizer(x),
            Lift::Cubic => DerivativeJet::from_fn(x, |k| poly::eval_deriv(&CUBIC_LIFT, x, k)),
        }
    }
}

impl std::str::FromStr for Lift {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp" | "exponential" => Ok(Lift::Exponential),
            "cubic" => Ok(Lift::Cubic),
            other => Err(format!("unknown lift `{other}` (exp|cubic)")),
        }
    }
}

impl std::fmt::Display for Lift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Lift::Exponential => "exp",
            Lift::Cubic => "cubic",
        })
    }
}

/// `(L u)(x)` from the jet of `u`, with the exponential lift.
pub fn operator_l(params: &ProblemParams, jet: &DerivativeJet) -> f64 {
    operator_l_lifted(params, Lift::Exponential, jet)
}

pub fn operator_l_lifted(params: &ProblemParams, lift: Lift, jet: &DerivativeJet) -> f64 {
    let w = operator_l_weights_lifted(params, lift, jet.x);
    (0..5).map(|k| w[k] * jet.d(k)).sum()
}

/// Weights `w_k` with `(L u)(x) = Σ_k w_k u^(k)(x)`.
pub fn operator_l_weights(params: &ProblemParams, x: f64) -> [f64; 5] {
    operator_l_weights_lifted(params, Lift::Exponential, x)
}

pub fn operator_l_weights_lifted(params: &ProblemParams, lift: Lift, x: f64) -> [f64; 5] {
    let g = lift.jet(x);
    [
        params.re * g.d(3),
        0.0,
        -params.m2(),
        params.re * g.d(0),
        1.0,
    ]
}

/// Right-hand side `M(x, u, u''')` with the exponential lift.
pub fn rhs_m(params: &ProblemParams, x: f64, u_val: f64, u3_val: f64) -> f64 {
    rhs_m_lifted(params, Lift::Exponential, x, u_val, u3_val)
}

pub fn rhs_m_lifted(params: &ProblemParams, lift: Lift, x: f64, u_val: f64, u3_val: f64) -> f64 {
    let g = lift.jet(x);
    -params.re * u3_val * u_val - params.re * g.d(0) * g.d(3) - g.d(4) + params.m2() * g.d(2)
}

/// `F'''' - m² F'' + Re F F'''`.
pub fn bvp_residual(params: &ProblemParams, jet: &DerivativeJet) -> f64 {
    jet.d(4) - params.m2() * jet.d(2) + params.re * jet.d(0) * jet.d(3)
}

/// Closed-form solution of the linear (`re = 0`) problem.
pub fn analytic_linear_solution(params: &ProblemParams, x: f64) -> Result<f64> {
    Ok(analytic_linear_jet(params, x)?.d(0))
}

/// `F, F', …, F''''` of the `re = 0` solution `F = B x + C sinh(m x)`
/// (`(3x - x³)/2` when `m = 0`).
pub fn analytic_linear_jet(params: &ProblemParams, x: f64) -> Result<DerivativeJet> {
    if params.re != 0.0 {
        return Err(Error::InvalidParams(format!(
            "closed form exists only for re = 0 (got re = {})",
            params.re
        )));
    }
    let m = params.m;
    if m >= 0.1 {
        // Everything divided through by cosh(m) so large m cannot overflow.
        let decay = (-2.0 * m).exp();
        let lead = (m * (x - 1.0)).exp() / (1.0 + decay);
        let tail = (-2.0 * m * x).exp();
        let rs = lead * (1.0 - tail); // sinh(mx)/cosh(m)
        let rc = lead * (1.0 + tail); // cosh(mx)/cosh(m)
        let den = m - m.tanh();
        return Ok(DerivativeJet::new(
            x,
            [
                (m * x - rs) / den,
                (m - m * rc) / den,
                -m * m * rs / den,
                -m.powi(3) * rc / den,
                -m.powi(4) * rs / den,
            ],
        ));
    }

    // Small m: both numerator and denominator are O(m³); expand in m and cancel.
    let m2 = m * m;
    let fact = |n: usize| poly::falling(n, n);
    let mut den = 0.0;
    let mut n0 = 0.0;
    let mut n1 = 0.0;
    let mut pow = 1.0; // m^(2k-2)
    for k in 1..=8 {
        let e = fact(2 * k);
        let o = fact(2 * k + 1);
        den += pow * (1.0 / e - 1.0 / o);
        n0 += pow * (x / e - x.powi(2 * k as i32 + 1) / o);
        n1 += pow * (1.0 - x.powi(2 * k as i32)) / e;
        pow *= m2;
    }
    // sinh(mx)/m and cosh(mx)
    let mut sh = 0.0;
    let mut ch = 0.0;
    let mut pow = 1.0; // m^(2k)
    for k in 0..=8 {
        sh += pow * x.powi(2 * k as i32 + 1) / fact(2 * k + 1);
        ch += pow * x.powi(2 * k as i32) / fact(2 * k);
        pow *= m2;
    }
    Ok(DerivativeJet::new(
        x,
        [n0 / den, n1 / den, -sh / den, -ch / den, -m2 * sh / den],
    ))
}

/// Velocity in units of the plate speed `V`, at radius `r` (units of the
/// half-gap `H`), from the scaled profile `F* = 2F/V` and its slope:
/// `u_r = (r/2) F*'(z)`, `u_z = -F*(z)`.
pub fn velocity_field(f_val: f64, fp_val: f64, r: f64) -> (f64, f64) {
    (0.5 * r * fp_val, -f_val)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic_jet(x: f64) -> DerivativeJet {
        let u = [0.0, 1.0, 0.0, -3.0, 2.0];
        DerivativeJet::from_fn(x, |k| poly::eval_deriv(&u, x, k))
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(-1.0, 0.0).is_err());
        assert!(ProblemParams::new(f64::NAN, 0.0).is_err());
        assert!(ProblemParams::new(1.0, f64::INFINITY).is_err());
        assert!(ProblemParams::new(0.0, -3.0).is_ok());
    }

    #[test]
    fn lift_boundary_values() {
        let g1 = homogenizer(1.0);
        assert!((g1.d(0) - 1.0).abs() < 1e-15);
        assert!(g1.d(1).abs() < 1e-15);
        let g0 = homogenizer(0.0);
        assert_eq!(g0.d(0), 0.0);
        assert_eq!(g0.d(2), 0.0);
        let g = homogenizer(0.5);
        assert!((g.d(0) - 0.682_346_992_2).abs() < 1e-10);
        assert!((g.d(0) - 1.125 * (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn lift_factor_polynomials() {
        assert_eq!(homogenizer_factor(1), vec![4.0, -4.0, -1.0, 1.0]);
        assert_eq!(homogenizer_factor(2), vec![0.0, -6.0, 2.0, 1.0]);
        assert_eq!(homogenizer_factor(3), vec![-6.0, -2.0, 5.0, 1.0]);
        assert_eq!(homogenizer_factor(4), vec![-8.0, 8.0, 8.0, 1.0]);
        for x in [0.0, 0.3, 1.0] {
            let jet = homogenizer(x);
            for k in 0..5 {
                assert!((jet.d(k) - homogenizer_deriv(x, k)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn operator_examples() {
        let p00 = ProblemParams::new(0.0, 0.0).unwrap();
        assert_eq!(operator_l(&p00, &quartic_jet(0.5)), 48.0);
        let p10 = ProblemParams::new(1.0, 0.0).unwrap();
        assert_eq!(operator_l(&p10, &quartic_jet(0.0)), 48.0);

        // u(0.5) = 0.25, u''(0.5) = -3, u'''(0.5) = 6; g(0.5) = 1.125/√e, g'''(0.5) = -5.625/√e
        let p11 = ProblemParams::new(1.0, 1.0).unwrap();
        let s = (-0.5f64).exp();
        let expect = 48.0 + 1.125 * s * 6.0 + 3.0 + (-5.625 * s) * 0.25;
        assert!((operator_l(&p11, &quartic_jet(0.5)) - expect).abs() < 1e-13);

        let w = operator_l_weights(&p11, 0.5);
        let jet = quartic_jet(0.5);
        let via_weights: f64 = (0..5).map(|k| w[k] * jet.d(k)).sum();
        assert!((via_weights - expect).abs() < 1e-13);
    }

    #[test]
    fn rhs_examples() {
        let p = ProblemParams::new(2.0, 0.0).unwrap();
        let a = rhs_m(&p, 0.3, 1.0, 5.0);
        let b = rhs_m(&p, 0.3, -7.0, 0.1);
        assert_eq!(a, b);
        let g = homogenizer(0.3);
        assert!((a - (-g.d(4) + 4.0 * g.d(2))).abs() < 1e-14);

        let p11 = ProblemParams::new(1.0, 1.0).unwrap();
        let got = rhs_m(&p11, 0.0, 0.0, 123.0);
        assert!((got - 8.0 / std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn residual_examples() {
        let p = ProblemParams::new(0.0, 0.0).unwrap();
        let stokes = [0.0, 1.5, 0.0, -0.5];
        for x in [0.0, 0.25, 0.9] {
            let jet = DerivativeJet::from_fn(x, |k| poly::eval_deriv(&stokes, x, k));
            assert_eq!(bvp_residual(&p, &jet), 0.0);
        }
        let jet = quartic_jet(0.2);
        assert_eq!(bvp_residual(&p, &jet), jet.d(4));

        let p = ProblemParams::new(2.0, 3.0).unwrap();
        let g = homogenizer(0.4);
        let expect = g.d(4) - 4.0 * g.d(2) + 3.0 * g.d(0) * g.d(3);
        assert_eq!(bvp_residual(&p, &g), expect);
        assert!(expect.abs() > 1e-3);
    }

    #[test]
    fn analytic_linear_values() {
        let p0 = ProblemParams::new(0.0, 0.0).unwrap();
        assert!((analytic_linear_solution(&p0, 0.5).unwrap() - 0.6875).abs() < 1e-15);

        let p1 = ProblemParams::new(1.0, 0.0).unwrap();
        assert!((analytic_linear_solution(&p1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(analytic_linear_solution(&p1, 0.0).unwrap().abs() < 1e-15);
        let e = std::f64::consts::E;
        let expect = e * 1f64.cosh() * 0.5 - e * 0.5f64.sinh();
        assert!((analytic_linear_solution(&p1, 0.5).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.68078).abs() < 1e-5);

        let bad = ProblemParams::new(1.0, 1.0).unwrap();
        assert!(analytic_linear_solution(&bad, 0.5).is_err());
    }

    #[test]
    fn analytic_linear_is_continuous_in_m() {
        // series branch below 0.1, closed form above
        for x in [0.2, 0.7, 1.0] {
            let lo = analytic_linear_jet(&ProblemParams::new(0.1 - 1e-12, 0.0).unwrap(), x).unwrap();
            let hi = analytic_linear_jet(&ProblemParams::new(0.1, 0.0).unwrap(), x).unwrap();
            for k in 0..5 {
                assert!((lo.d(k) - hi.d(k)).abs() < 1e-10, "k={k}: {} vs {}", lo.d(k), hi.d(k));
            }
        }
        let big = analytic_linear_jet(&ProblemParams::new(400.0, 0.0).unwrap(), 0.5).unwrap();
        assert!(big.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn analytic_linear_satisfies_problem() {
        for m in [0.0, 0.05, 1.0, 3.0, 8.0, 20.0] {
            let p = ProblemParams::new(m, 0.0).unwrap();
            let at0 = analytic_linear_jet(&p, 0.0).unwrap();
            let at1 = analytic_linear_jet(&p, 1.0).unwrap();
            assert!(at0.d(0).abs() < 1e-14 && at0.d(2).abs() < 1e-12);
            assert!((at1.d(0) - 1.0).abs() < 1e-14 && at1.d(1).abs() < 1e-12);
            for i in 0..=10 {
                let jet = analytic_linear_jet(&p, i as f64 / 10.0).unwrap();
                let scale = 1.0 + m.powi(4);
                assert!(bvp_residual(&p, &jet).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn velocity_at_plate_and_midplane() {
        let (ur, uz) = velocity_field(1.0, 0.0, 2.5);
        assert_eq!(uz, -1.0);
        assert_eq!(ur, 0.0);
        let (_, uz) = velocity_field(0.0, 1.5, 1.0);
        assert_eq!(uz, 0.0);
    }

    #[test]
    fn both_lifts_meet_the_boundary_conditions() {
        for lift in [Lift::Exponential, Lift::Cubic] {
            let (g0, g1) = (lift.jet(0.0), lift.jet(1.0));
            assert!(g0.d(0).abs() < 1e-15 && g0.d(2).abs() < 1e-15, "{lift}");
            assert!((g1.d(0) - 1.0).abs() < 1e-15 && g1.d(1).abs() < 1e-15, "{lift}");
            for k in 0..5 {
                assert_eq!(lift.jet(0.3).d(k), lift.deriv(0.3, k));
            }
            assert_eq!(lift.to_string().parse::<Lift>().unwrap(), lift);
        }
        assert_eq!(Lift::Cubic.deriv(0.7, 4), 0.0);
        assert!("quadratic".parse::<Lift>().is_err());
    }

    #[test]
    fn lifted_operator_splits_the_residual() {
        let p = ProblemParams::new(2.0, 3.0).unwrap();
        for lift in [Lift::Exponential, Lift::Cubic] {
            let x = 0.35;
            let u = quartic_jet(x);
            let lhs = operator_l_lifted(&p, lift, &u) - rhs_m_lifted(&p, lift, x, u.d(0), u.d(3));
            let rhs = bvp_residual(&p, &(u + lift.jet(x)));
            assert!((lhs - rhs).abs() < 1e-12, "{lift}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn lift_jets_agree_with_central_differences() {
        let h = 1e-4;
        for lift in [Lift::Exponential, Lift::Cubic] {
            for i in 1..=9 {
                let x = i as f64 / 10.0;
                for k in 1..=4 {
                    let fd = (lift.deriv(x + h, k - 1) - lift.deriv(x - h, k - 1)) / (2.0 * h);
                    let exact = lift.deriv(x, k);
                    let err = (fd - exact).abs();
                    assert!(err <= 1e-6 * exact.abs().max(1e-300) || err < 1e-12, "{lift} x={x} k={k}: {fd} vs {exact}");
                }
            }
        }
    }
}
