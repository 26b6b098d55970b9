//! The acceptance suite: eleven numbered criteria, each reduced to a list of
//! measured quantities with their admissible ranges.

use std::fmt;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::{derive_kernel, inner_product, kernel_system_oracle, BivariateKernel, SpaceSpec};
use crate::oracles::{rk4_integrate, shoot, ShootOptions, ShootingSolution};
use crate::poly::PiecewisePoly;
use crate::problem::{
    analytic_linear_solution, bvp_residual, operator_l_lifted, rhs_m_lifted, DerivativeJet, Lift,
    ProblemParams,
};
use crate::reference::case_for_params;
use crate::solver::{
    build_basis, definitional_gram, gram_and_orthonormalize, gram_matrix, solve_with_kernel,
    CollocationGrid, RkhsmSolution, SolveOptions,
};
use crate::typos::{printed_w24_lower, printed_w24_upper};

/// One measured quantity and the closed range it must fall in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl Check {
    pub fn at_most(label: impl Into<String>, value: f64, max: f64) -> Self {
        Self {
            label: label.into(),
            value,
            min: f64::NEG_INFINITY,
            max,
        }
    }

    pub fn within(label: impl Into<String>, value: f64, min: f64, max: f64) -> Self {
        Self {
            label: label.into(),
            value,
            min,
            max,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.value >= self.min && self.value <= self.max
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed() { "ok" } else { "FAIL" };
        if self.min == f64::NEG_INFINITY {
            write!(f, "[{mark}] {} = {:.3e} (limit {:.1e})", self.label, self.value, self.max)
        } else {
            write!(
                f,
                "[{mark}] {} = {:.4} (range [{}, {}])",
                self.label, self.value, self.min, self.max
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub checks: Vec<Check>,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    /// `PASS  C3  name` or `FAIL  C3  name`.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        format!("{verdict}  C{:<2} {}", self.id, self.name)
    }

    pub fn details(&self) -> String {
        let mut out = String::new();
        if let Some(e) = &self.error {
            out.push_str(&format!("    error: {e}\n"));
        }
        for c in &self.checks {
            out.push_str(&format!("    {c}\n"));
        }
        out
    }
}

pub const CRITERION_COUNT: usize = 11;

pub const CRITERION_NAMES: [&str; CRITERION_COUNT] = [
    "Stokes limit (m=0, Re=0), n=16",
    "linear closed form, Re=0, m in {1,3,8}, n=32",
    "(m=1, Re=1), n=32, against oracle and printed columns",
    "(m=3 and m=8, Re=1), n=32, against oracle and printed RK-4",
    "(m=20, Re=1), n=64, boundary layer",
    "(m=1, Re in {4,10}), n=32, against oracle",
    "kernel properties",
    "basis properties",
    "convergence trend along n in {8,16,32,64}",
    "structural identity L(u) - M = residual of u + g",
    "RK-4 empirical order",
];

/// Shared, precomputed inputs.
pub struct Suite {
    w25: BivariateKernel,
    w24: BivariateKernel,
    seed: u64,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// `0.1, 0.2, …, 0.9`.
pub fn interior_points() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn sup(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN poisons the maximum instead of being skipped.
    values
        .into_iter()
        .fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn params(m: f64, re: f64) -> Result<ProblemParams> {
    ProblemParams::new(m, re)
}

fn label(m: f64, re: f64) -> String {
    format!("(m={m}, Re={re})")
}

impl Suite {
    pub fn new() -> Result<Self> {
        Self::with_seed(DEFAULT_SEED)
    }

    pub fn with_seed(seed: u64) -> Result<Self> {
        Ok(Self {
            w25: derive_kernel(&SpaceSpec::w25())?,
            w24: derive_kernel(&SpaceSpec::w24())?,
            seed,
        })
    }

    fn solve(&self, p: &ProblemParams, n: usize) -> Result<RkhsmSolution> {
        let grid = CollocationGrid::uniform(n)?;
        solve_with_kernel(p, &grid, &SolveOptions::default(), &self.w25)
    }

    fn deviation(sol: &RkhsmSolution, oracle: &ShootingSolution, xs: &[f64]) -> Result<f64> {
        let mut diffs = Vec::with_capacity(xs.len());
        for &x in xs {
            diffs.push((sol.eval(x, 0)? - oracle.value_at(x)).abs());
        }
        Ok(sup(diffs))
    }

    /// Max over unflagged printed rows at `xs` of |oracle - printed RK-4|.
    fn oracle_vs_printed(oracle: &ShootingSolution, m: f64, re: f64, xs: &[f64]) -> Option<f64> {
        let case = case_for_params(m, re)?;
        Some(sup(xs.iter().filter_map(|&x| {
            case.row_at(x)
                .filter(|r| !r.suspect)
                .map(|r| (oracle.value_at(x) - r.rk4).abs())
        })))
    }

    pub fn run(&self, id: usize) -> CriterionOutcome {
        let result = match id {
            1 => self.c1(),
            2 => self.c2(),
            3 => self.c3(),
            4 => self.c4(),
            5 => self.c5(),
            6 => self.c6(),
            7 => self.c7(),
            8 => self.c8(),
            9 => self.c9(),
            10 => self.c10(),
            11 => self.c11(),
            _ => Err(crate::Error::InvalidParams(format!("no criterion {id}"))),
        };
        let name = CRITERION_NAMES
            .get(id.wrapping_sub(1))
            .map_or_else(|| format!("criterion {id}"), |s| s.to_string());
        match result {
            Ok(checks) => CriterionOutcome {
                id,
                name,
                checks,
                error: None,
            },
            Err(e) => CriterionOutcome {
                id,
                name,
                checks: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    }

    pub fn run_all(&self) -> Vec<CriterionOutcome> {
        (1..=CRITERION_COUNT).map(|id| self.run(id)).collect()
    }

    fn c1(&self) -> Result<Vec<Check>> {
        let start = Instant::now();
        let kernel = derive_kernel(&SpaceSpec::w25())?;
        let p = params(0.0, 0.0)?;
        let sol = solve_with_kernel(&p, &CollocationGrid::uniform(16)?, &SolveOptions::default(), &kernel)?;
        let elapsed = start.elapsed().as_secs_f64();
        let mut diffs = Vec::with_capacity(101);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            diffs.push((sol.eval(x, 0)? - 0.5 * (3.0 * x - x.powi(3))).abs());
        }
        Ok(vec![
            Check::at_most("max |F - (3x - x^3)/2| over 101 points", sup(diffs), 1e-8),
            Check::within("iterations", sol.iterations as f64, 1.0, 2.0),
            Check::within("converged (1 = yes)", sol.converged as u8 as f64, 1.0, 1.0),
            Check::at_most("runtime [s] including kernel derivation", elapsed, 1.0),
        ])
    }

    fn c2(&self) -> Result<Vec<Check>> {
        let xs = interior_points();
        let mut checks = Vec::new();
        for (m, tol) in [(1.0, 1e-6), (3.0, 1e-6), (8.0, 1e-5)] {
            let p = params(m, 0.0)?;
            let sol = self.solve(&p, 32)?;
            let oracle = shoot(&p, &ShootOptions::default())?;
            let mut rk = Vec::new();
            let mut sh = Vec::new();
            for &x in &xs {
                let exact = analytic_linear_solution(&p, x)?;
                rk.push((sol.eval(x, 0)? - exact).abs());
                sh.push((oracle.value_at(x) - exact).abs());
            }
            checks.push(Check::at_most(format!("m={m}: max |F_rkhsm - F_exact|"), sup(rk), tol));
            checks.push(Check::at_most(format!("m={m}: max |F_shoot - F_exact|"), sup(sh), 1e-9));
        }
        Ok(checks)
    }

    fn c3(&self) -> Result<Vec<Check>> {
        let xs = interior_points();
        let p = params(1.0, 1.0)?;
        let sol = self.solve(&p, 32)?;
        let oracle = shoot(&p, &ShootOptions::default())?;
        let case = case_for_params(1.0, 1.0)
            .ok_or_else(|| crate::Error::ReferenceData("no reference case (1, 1)".into()))?;
        let mut printed = Vec::new();
        for &x in &xs {
            if let Some(r) = case.row_at(x) {
                printed.push((sol.eval(x, 0)? - r.rkhsm).abs());
            }
        }
        Ok(vec![
            Check::at_most("max |F_rkhsm - F_shoot|", Self::deviation(&sol, &oracle, &xs)?, 1e-5),
            Check::at_most(
                "max |F_shoot - printed RK-4|",
                Self::oracle_vs_printed(&oracle, 1.0, 1.0, &xs).unwrap_or(f64::NAN),
                1e-5,
            ),
            Check::at_most("max |F_rkhsm - printed RKHSM|", sup(printed), 1e-5),
        ])
    }

    fn c4(&self) -> Result<Vec<Check>> {
        let xs = interior_points();
        let mut checks = Vec::new();
        for m in [3.0, 8.0] {
            let p = params(m, 1.0)?;
            let sol = self.solve(&p, 32)?;
            let oracle = shoot(&p, &ShootOptions::default())?;
            checks.push(Check::at_most(
                format!("{}: max |F_rkhsm - F_shoot|", label(m, 1.0)),
                Self::deviation(&sol, &oracle, &xs)?,
                5e-5,
            ));
            checks.push(Check::at_most(
                format!("{}: max |F_shoot - printed RK-4|", label(m, 1.0)),
                Self::oracle_vs_printed(&oracle, m, 1.0, &xs).unwrap_or(f64::NAN),
                1e-5,
            ));
        }
        Ok(checks)
    }

    fn c5(&self) -> Result<Vec<Check>> {
        let xs = interior_points();
        let p = params(20.0, 1.0)?;
        let sol = self.solve(&p, 64)?;
        // m > 5 switches the oracle to parameter continuation.
        let oracle = shoot(&p, &ShootOptions::default())?;
        Ok(vec![
            Check::at_most("max |F_rkhsm - F_shoot| (achieved)", Self::deviation(&sol, &oracle, &xs)?, 1e-3),
            Check::at_most(
                "max |F_shoot - printed RK-4|",
                Self::oracle_vs_printed(&oracle, 20.0, 1.0, &xs).unwrap_or(f64::NAN),
                1e-5,
            ),
        ])
    }

    fn c6(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for re in [4.0, 10.0] {
            let p = params(1.0, re)?;
            let sol = self.solve(&p, 32)?;
            let oracle = shoot(&p, &ShootOptions::default())?;
            let case = case_for_params(1.0, re);
            let xs: Vec<f64> = interior_points()
                .into_iter()
                .filter(|&x| !case.and_then(|c| c.row_at(x)).is_some_and(|r| r.suspect))
                .collect();
            checks.push(Check::at_most(
                format!("{}: max |F_rkhsm - F_shoot| over {} points", label(1.0, re), xs.len()),
                Self::deviation(&sol, &oracle, &xs)?,
                5e-5,
            ));
        }
        Ok(checks)
    }

    fn c7(&self) -> Result<Vec<Check>> {
        let mut rng = StdRng::seed_from_u64(self.seed);
        let mut checks = Vec::new();
        let members: [(&str, SpaceSpec, &BivariateKernel, Vec<Vec<f64>>); 2] = [
            ("w25", SpaceSpec::w25(), &self.w25, w25_members()),
            ("w24", SpaceSpec::w24(), &self.w24, w24_members()),
        ];
        for (name, spec, kernel, polys) in &members {
            let ys: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut worst = 0.0f64;
            for coeffs in polys {
                let u = PiecewisePoly::from_poly(coeffs.clone());
                for &y in &ys {
                    let got = inner_product(spec, &u, &kernel.slice(y, 0));
                    worst = worst.max((got - u.eval(y)).abs());
                }
            }
            checks.push(Check::at_most(
                format!("{name}: max |<u, K(., y)> - u(y)|, 3 members x 20 y"),
                worst,
                1e-8,
            ));
        }

        let mut worst = 0.0f64;
        for _ in 0..20 {
            let y: f64 = rng.gen_range(0.0..1.0);
            let s = self.w25.slice(y, 0);
            for v in [s.eval(0.0), s.eval(1.0), s.eval_deriv(1.0, 1), s.eval_deriv(0.0, 2)] {
                worst = worst.max(v.abs());
            }
        }
        checks.push(Check::at_most(
            "w25: max |K(0,y)|, |K(1,y)|, |K_x(1,y)|, |K_xx(0,y)| over 20 y",
            worst,
            1e-10,
        ));

        for (name, spec, kernel) in [("w25", SpaceSpec::w25(), &self.w25), ("w24", SpaceSpec::w24(), &self.w24)] {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let y: f64 = rng.gen_range(0.0..1.0);
                let (c, d) = kernel.coefficients_at(y);
                let (oc, od) = kernel_system_oracle(&spec, y)?;
                worst = worst.max(piece_relative(&c, &oc)).max(piece_relative(&d, &od));
            }
            checks.push(Check::at_most(
                format!("{name}: derived vs condition-system coefficients, relative, 10 y"),
                worst,
                1e-9,
            ));
        }

        let mut worst = 0.0f64;
        for _ in 0..20 {
            let y: f64 = rng.gen_range(0.0..1.0);
            let (c, d) = self.w24.coefficients_at(y);
            for (a, b) in c.iter().zip(printed_w24_lower(y)).chain(d.iter().zip(printed_w24_upper(y))) {
                worst = worst.max((a - b).abs());
            }
        }
        checks.push(Check::at_most("w24: derived vs closed-form coefficients", worst, 1e-12));
        Ok(checks)
    }

    fn c8(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        let lift = SolveOptions::default().lift;
        for m in [1.0, 3.0, 8.0] {
            let p = params(m, 1.0)?;
            let psi = build_basis(&p, lift, &CollocationGrid::uniform(32)?, &self.w25);
            let basis = gram_and_orthonormalize(&p, lift, psi)?;
            let g = &basis.gram;
            let n = g.dim();
            let mut asym = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    asym = asym.max((g[(i, j)] - g[(j, i)]).abs());
                }
            }
            checks.push(Check::at_most(
                format!("{}: Gram asymmetry relative to max |G|", label(m, 1.0)),
                asym / g.max_abs(),
                1e-8,
            ));
            checks.push(Check::at_most(
                format!("{}: max |beta G beta^T - I|", label(m, 1.0)),
                basis.orthonormality_defect(),
                1e-8,
            ));
        }
        for lift in [Lift::Cubic, Lift::Exponential] {
            let p = params(1.0, 1.0)?;
            let psi = build_basis(&p, lift, &CollocationGrid::uniform(4)?, &self.w25);
            let pointwise = gram_matrix(&p, lift, &psi);
            let integral = definitional_gram(&psi);
            let mut diff = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    diff = diff.max((pointwise[(i, j)] - integral[(i, j)]).abs());
                }
            }
            checks.push(Check::at_most(
                format!("{lift} lift, 4 points: pointwise vs integral Gram, relative"),
                diff / integral.max_abs(),
                1e-8,
            ));
        }
        Ok(checks)
    }

    fn c9(&self) -> Result<Vec<Check>> {
        let xs = interior_points();
        let p = params(1.0, 1.0)?;
        let oracle = shoot(&p, &ShootOptions::default())?;
        let mut errors = Vec::new();
        for n in [8, 16, 32, 64] {
            errors.push((n, Self::deviation(&self.solve(&p, n)?, &oracle, &xs)?));
        }
        Ok(errors
            .windows(2)
            .map(|w| {
                Check::at_most(
                    format!("error(n={}) / error(n={}) [{:.2e} / {:.2e}]", w[1].0, w[0].0, w[1].1, w[0].1),
                    w[1].1 / w[0].1,
                    1.1,
                )
            })
            .collect())
    }

    fn c10(&self) -> Result<Vec<Check>> {
        let trials: [(&str, fn(f64) -> DerivativeJet); 3] = [
            ("x - 3x^3 + 2x^4", |x| {
                DerivativeJet::new(
                    x,
                    [
                        x - 3.0 * x.powi(3) + 2.0 * x.powi(4),
                        1.0 - 9.0 * x * x + 8.0 * x.powi(3),
                        -18.0 * x + 24.0 * x * x,
                        -18.0 + 48.0 * x,
                        48.0,
                    ],
                )
            }),
            ("sin 3x", |x| {
                DerivativeJet::from_fn(x, |k| {
                    3f64.powi(k as i32) * (3.0 * x + k as f64 * std::f64::consts::FRAC_PI_2).sin()
                })
            }),
            ("x e^(2x)", |x| {
                DerivativeJet::from_fn(x, |k| {
                    let k = k as i32;
                    (2f64.powi(k) * x + k as f64 * 2f64.powi(k - 1)) * (2.0 * x).exp()
                })
            }),
        ];
        let mut checks = Vec::new();
        for lift in [Lift::Exponential, Lift::Cubic] {
            let mut worst = 0.0f64;
            for (m, re) in [(1.0, 1.0), (3.0, 4.0), (8.0, 10.0)] {
                let p = params(m, re)?;
                for (_, trial) in &trials {
                    for x in interior_points() {
                        let u = trial(x);
                        let lhs = operator_l_lifted(&p, lift, &u) - rhs_m_lifted(&p, lift, x, u.d(0), u.d(3));
                        let rhs = bvp_residual(&p, &(u + lift.jet(x)));
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
            checks.push(Check::at_most(
                format!("{lift} lift: max |L(u) - M - residual(u + g)|, 3 x 9 x 3"),
                worst,
                1e-9,
            ));
        }
        Ok(checks)
    }

    fn c11(&self) -> Result<Vec<Check>> {
        let p = params(1.0, 1.0)?;
        let slopes = shoot(&p, &ShootOptions::default())?.slopes;
        let steps = [250, 500, 1000, 2000];
        let mut finals = Vec::new();
        for n in steps {
            let states = rk4_integrate(&p, slopes, n)?;
            finals.push(*states.last().expect("at least one state"));
        }
        let diffs: Vec<f64> = finals
            .windows(2)
            .map(|w| sup(w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs())))
            .collect();
        Ok(diffs
            .windows(2)
            .zip(steps.windows(3))
            .map(|(d, n)| {
                Check::within(
                    format!("order from N = {}, {}, {}", n[0], n[1], n[2]),
                    (d[0] / d[1]).log2(),
                    3.8,
                    4.2,
                )
            })
            .collect())
    }
}

/// `‖a - b‖∞ / ‖b‖∞`, or the absolute difference if `b` vanishes.
fn piece_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Polynomials (coefficients in powers of x) satisfying the `W₂⁵` constraints.
pub fn w25_members() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 1.0, 0.0, -3.0, 2.0],
        // x³(1-x)²
        vec![0.0, 0.0, 0.0, 1.0, -2.0, 1.0],
        // x(1-x)²(1 + 2x + 3x⁴)
        vec![0.0, 1.0, 0.0, -3.0, 2.0, 3.0, -6.0, 3.0],
    ]
}

/// Members of the unconstrained `W₂⁴`, degree at most 7.
pub fn w24_members() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 2.0, 0.0, -1.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -0.3],
        vec![0.5, -1.0, 3.0, 0.25, -2.0, 0.0, 1.5, 1.0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_ranges() {
        assert!(Check::at_most("a", 1e-9, 1e-8).passed());
        assert!(!Check::at_most("a", f64::NAN, 1e-8).passed());
        assert!(Check::within("b", 4.0, 3.8, 4.2).passed());
        assert!(!Check::within("b", 4.3, 3.8, 4.2).passed());
    }

    #[test]
    fn sup_propagates_nan() {
        assert!(sup([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(sup([1.0, 3.0, 2.0]), 3.0);
        assert_eq!(sup(std::iter::empty()), 0.0);
    }

    #[test]
    fn members_satisfy_w25_constraints() {
        for c in w25_members() {
            let u = PiecewisePoly::from_poly(c);
            for v in [u.eval(0.0), u.eval(1.0), u.eval_deriv(1.0, 1), u.eval_deriv(0.0, 2)] {
                assert!(v.abs() < 1e-14, "{v}");
            }
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let suite = Suite::new().unwrap();
        let out = suite.run(12);
        assert!(!out.passed());
        assert!(out.summary_line().starts_with("FAIL"));
    }
}
