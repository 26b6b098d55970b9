//! Reference solutions that share no code with the kernel solver: a
//! fixed-step RK-4 shooting method and finite-difference derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, Matrix};
use crate::problem::ProblemParams;

/// `(F, F', F'', F''')`
pub type State = [f64; 4];

pub const MIN_STEPS: usize = 100;
pub const DEFAULT_STEPS: usize = 2000;

fn rhs(params: &ProblemParams, y: &State) -> State {
    [y[1], y[2], y[3], params.m2() * y[2] - params.re * y[0] * y[3]]
}

fn axpy(y: &State, h: f64, k: &State) -> State {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// Classical RK-4 from `x = 0` with `y(0) = (0, slopes.0, 0, slopes.1)` and
/// step `1/steps`. Returns the `steps + 1` states at `x = i/steps`.
pub fn rk4_integrate(params: &ProblemParams, slopes: (f64, f64), steps: usize) -> Result<Vec<State>> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidParams(format!(
            "RK-4 needs at least {MIN_STEPS} steps (got {steps})"
        )));
    }
    let h = 1.0 / steps as f64;
    let mut y = [0.0, slopes.0, 0.0, slopes.1];
    // Kahan compensation for the running state keeps roundoff below the
    // truncation error even at the finest step counts used.
    let mut carry = [0.0; 4];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y);
    for step in 1..=steps {
        let k1 = rhs(params, &y);
        let k2 = rhs(params, &axpy(&y, 0.5 * h, &k1));
        let k3 = rhs(params, &axpy(&y, 0.5 * h, &k2));
        let k4 = rhs(params, &axpy(&y, h, &k3));
        for i in 0..4 {
            let inc = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) - carry[i];
            let next = y[i] + inc;
            carry[i] = (next - y[i]) - inc;
            y[i] = next;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                x: step as f64 * h,
            });
        }
        out.push(y);
    }
    Ok(out)
}

/// `(F(1) - 1, F'(1))` for the given initial slopes.
pub fn terminal_residual(params: &ProblemParams, slopes: (f64, f64), steps: usize) -> Result<(f64, f64)> {
    let traj = rk4_integrate(params, slopes, steps)?;
    let end = traj[steps];
    Ok((end[0] - 1.0, end[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub steps: usize,
    pub newton_tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            newton_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingSolution {
    pub params: ProblemParams,
    /// `(F'(0), F'''(0))`
    pub slopes: (f64, f64),
    pub steps: usize,
    /// Newton iterations summed over all continuation stages.
    pub newton_iters: usize,
    pub terminal_residual: (f64, f64),
    /// `(x, F, F', F'', F''')` at every step.
    pub dense_values: Vec<[f64; 5]>,
}

/// Exact slopes of the `m = 0, re = 0` problem.
pub const STOKES_SLOPES: (f64, f64) = (1.5, -3.0);
const JACOBIAN_STEP: f64 = 1e-7;
const MAX_NEWTON: usize = 50;
const CONTINUATION_STAGES: usize = 8;

/// Cases beyond these magnitudes are reached by continuation from `(0, 0)`.
fn needs_continuation(params: &ProblemParams) -> bool {
    params.m > 5.0 || params.re.abs() > 5.0
}

fn newton(
    params: &ProblemParams,
    start: (f64, f64),
    opts: &ShootOptions,
) -> Result<((f64, f64), (f64, f64), usize)> {
    let mut s = start;
    let mut r = terminal_residual(params, s, opts.steps)?;
    for iter in 0..MAX_NEWTON {
        if r.0.abs().max(r.1.abs()) <= opts.newton_tol {
            return Ok((s, r, iter));
        }
        let h0 = JACOBIAN_STEP * s.0.abs().max(1.0);
        let h1 = JACOBIAN_STEP * s.1.abs().max(1.0);
        let r0 = terminal_residual(params, (s.0 + h0, s.1), opts.steps)?;
        let r1 = terminal_residual(params, (s.0, s.1 + h1), opts.steps)?;
        let jac = Matrix::from_fn(2, |i, j| {
            let (rp, h) = if j == 0 { (r0, h0) } else { (r1, h1) };
            let (a, b) = if i == 0 { (rp.0, r.0) } else { (rp.1, r.1) };
            (a - b) / h
        });
        let step = lu_solve(&jac, &[-r.0, -r.1], "shooting Jacobian")?;
        s = (s.0 + step[0], s.1 + step[1]);
        r = terminal_residual(params, s, opts.steps)?;
    }
    if r.0.abs().max(r.1.abs()) <= opts.newton_tol {
        return Ok((s, r, MAX_NEWTON));
    }
    Err(Error::NewtonStagnation {
        iterations: MAX_NEWTON,
        residual: r,
        slopes: s,
    })
}

/// Solves the boundary value problem by Newton shooting on `(F'(0), F'''(0))`.
pub fn shoot(params: &ProblemParams, opts: &ShootOptions) -> Result<ShootingSolution> {
    if !(opts.newton_tol > 0.0) {
        return Err(Error::InvalidParams(format!(
            "newton_tol must be positive (got {})",
            opts.newton_tol
        )));
    }
    let stages: Vec<ProblemParams> = if needs_continuation(params) {
        (1..=CONTINUATION_STAGES)
            .map(|k| {
                let t = k as f64 / CONTINUATION_STAGES as f64;
                ProblemParams {
                    m: params.m * t,
                    re: params.re * t,
                }
            })
            .collect()
    } else {
        vec![*params]
    };

    let mut slopes = STOKES_SLOPES;
    let mut residual = (f64::NAN, f64::NAN);
    let mut newton_iters = 0;
    for stage in &stages {
        let (s, r, iters) = newton(stage, slopes, opts)?;
        slopes = s;
        residual = r;
        newton_iters += iters;
    }

    let h = 1.0 / opts.steps as f64;
    let dense_values = rk4_integrate(params, slopes, opts.steps)?
        .iter()
        .enumerate()
        .map(|(i, y)| [i as f64 * h, y[0], y[1], y[2], y[3]])
        .collect();
    Ok(ShootingSolution {
        params: *params,
        slopes,
        steps: opts.steps,
        newton_iters,
        terminal_residual: residual,
        dense_values,
    })
}

impl ShootingSolution {
    /// `F(x)`: the stored value on step points, cubic Hermite in between.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.steps;
        let t = x.clamp(0.0, 1.0) * n as f64;
        let nearest = t.round();
        if (t - nearest).abs() < 1e-9 {
            return self.dense_values[nearest as usize][1];
        }
        let i = (t.floor() as usize).min(n - 1);
        let (a, b) = (&self.dense_values[i], &self.dense_values[i + 1]);
        let h = b[0] - a[0];
        let s = (x - a[0]) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * a[1]
            + (s3 - 2.0 * s2 + s) * h * a[2]
            + (-2.0 * s3 + 3.0 * s2) * b[1]
            + (s3 - s2) * h * b[2]
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.terminal_residual.0.abs() <= tol && self.terminal_residual.1.abs() <= tol
    }
}

/// Weights `w_j` with `f^(order)(x) ≈ Σ_j w_j f(x + offsets[j])` for unit spacing.
fn stencil_weights(offsets: &[f64], order: usize) -> Vec<f64> {
    // Fornberg's recursion, evaluated at 0.
    let n = offsets.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            for k in (0..=order.min(i)).rev() {
                let prev = if k > 0 { c[i - 1][k - 1] } else { 0.0 };
                if j == i - 1 {
                    c[i][k] = c1 * (k as f64 * prev - offsets[j] * c[i - 1][k]) / c2;
                }
                let lower = if k > 0 { c[j][k - 1] } else { 0.0 };
                c[j][k] = (offsets[i] * c[j][k] - k as f64 * lower) / c3;
            }
        }
        c1 = c2;
    }
    c.iter().map(|row| row[order]).collect()
}

/// Finite-difference `f^(order)(x)` for `order` in `1..=4`, fourth-order
/// accurate in `h`. The stencil is centred where it fits in `[0, 1]` and
/// shifted inwards otherwise.
pub fn finite_diff(f: impl Fn(f64) -> f64, x: f64, order: usize, h: f64) -> f64 {
    assert!((1..=4).contains(&order), "finite_diff supports orders 1..=4");
    let half: i64 = if order <= 2 { 2 } else { 3 };
    let len = 2 * half + 1;
    let lo_limit = (-x / h).ceil() as i64;
    let hi_limit = ((1.0 - x) / h).floor() as i64;
    let mut first = -half;
    if first < lo_limit {
        first = lo_limit;
    }
    if first + len - 1 > hi_limit {
        first = hi_limit - len + 1;
    }
    let offsets: Vec<f64> = (first..first + len).map(|j| j as f64).collect();
    let w = stencil_weights(&offsets, order);
    let sum: f64 = offsets.iter().zip(&w).map(|(o, wj)| wj * f(x + o * h)).sum();
    sum / h.powi(order as i32)
}

/// Empirical order `log2(|y_N - y_2N| / |y_2N - y_4N|)` from a sequence of
/// results at step counts that double each time. Returns one estimate per
/// consecutive triple.
pub fn observed_orders(values: &[f64]) -> Vec<f64> {
    values
        .windows(3)
        .map(|w| ((w[0] - w[1]).abs() / (w[1] - w[2]).abs()).log2())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{analytic_linear_jet, homogenizer};

    #[test]
    fn stokes_slopes_hit_the_far_boundary() {
        let p = ProblemParams::new(0.0, 0.0).unwrap();
        let r = terminal_residual(&p, STOKES_SLOPES, 200).unwrap();
        assert!(r.0.abs() < 1e-12 && r.1.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn analytic_slopes_for_linear_case() {
        let p = ProblemParams::new(1.0, 0.0).unwrap();
        let j = analytic_linear_jet(&p, 0.0).unwrap();
        let r = terminal_residual(&p, (j.d(1), j.d(3)), 1000).unwrap();
        assert!(r.0.abs() < 1e-10 && r.1.abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn too_few_steps() {
        let p = ProblemParams::new(0.0, 0.0).unwrap();
        assert!(rk4_integrate(&p, STOKES_SLOPES, 10).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let p = ProblemParams::new(0.0, 1e6).unwrap();
        match rk4_integrate(&p, (1e6, 1e6), 100) {
            Err(Error::NonFinite { step, .. }) => assert!(step >= 1),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn shoot_stokes() {
        let p = ProblemParams::new(0.0, 0.0).unwrap();
        let sol = shoot(&p, &ShootOptions::default()).unwrap();
        assert_eq!(sol.newton_iters, 0);
        assert_eq!(sol.slopes, STOKES_SLOPES);
        assert!((sol.value_at(0.5) - 0.6875).abs() < 1e-14);
        assert!((sol.value_at(0.123_45) - (3.0 * 0.123_45 - 0.123_45f64.powi(3)) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn shoot_uses_continuation_for_large_m() {
        let p = ProblemParams::new(8.0, 0.0).unwrap();
        let sol = shoot(&p, &ShootOptions::default()).unwrap();
        assert!(sol.converged(1e-10));
        for i in 1..10 {
            let x = i as f64 / 10.0;
            let exact = analytic_linear_jet(&p, x).unwrap().d(0);
            assert!((sol.value_at(x) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_options() {
        let p = ProblemParams::new(1.0, 1.0).unwrap();
        let opts = ShootOptions {
            newton_tol: 0.0,
            ..Default::default()
        };
        assert!(shoot(&p, &opts).is_err());
    }

    #[test]
    fn finite_difference_examples() {
        assert!((finite_diff(|x| x * x * x, 0.5, 2, 1e-4) - 3.0).abs() < 1e-8);
        assert!((finite_diff(f64::sinh, 0.3, 1, 1e-4) - 0.3f64.cosh()).abs() < 1e-9);
        let g3 = homogenizer(0.5).d(3);
        let fd = finite_diff(|x| homogenizer(x).d(0), 0.5, 3, 1e-3);
        assert!(((fd - g3) / g3).abs() < 1e-6, "{fd} vs {g3}");
    }

    #[test]
    fn finite_difference_near_the_ends() {
        let cube = |x: f64| x * x * x;
        assert!((finite_diff(cube, 0.0, 1, 1e-3)).abs() < 1e-9);
        assert!((finite_diff(cube, 1.0, 1, 1e-3) - 3.0).abs() < 1e-9);
        assert!((finite_diff(cube, 0.999, 3, 1e-3) - 6.0).abs() < 1e-5);
        let quart = |x: f64| x.powi(4);
        assert!((finite_diff(quart, 0.0005, 4, 1e-2) - 24.0).abs() < 1e-4);
    }

    #[test]
    fn stencil_weights_match_textbook() {
        let w = stencil_weights(&[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = stencil_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn orders_from_halving() {
        let vals: Vec<f64> = [1.0, 0.5, 0.25, 0.125].iter().map(|h: &f64| 2.0 + h.powi(4)).collect();
        for o in observed_orders(&vals) {
            assert!((o - 4.0).abs() < 1e-9);
        }
    }
}
