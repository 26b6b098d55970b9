//! Reproducing-kernel collocation for `L u = M(x, u, u''')`.
//!
//! For collocation points `x_i` the basis functions are
//! `Ψ_i(x) = (L_η K(η, x))(x_i)`, i.e. the operator applied to the first slot
//! of the `W₂⁵` kernel. They satisfy `⟨u, Ψ_i⟩ = (L u)(x_i)` for every member
//! `u`, so their Gram matrix is `G_ij = (L Ψ_j)(x_i)`. Gram–Schmidt in that
//! inner product gives a lower-triangular `β` with `Ψ̄ = β Ψ` orthonormal, and
//! the truncated series
//!
//! ```text
//! u_n = Σ_i Σ_{k≤i} β_ik M(x_k, u(x_k), u'''(x_k)) Ψ̄_i
//! ```
//!
//! is closed by damped fixed-point iteration on the values `M(x_k, …)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{BivariateKernel, SpaceSpec};
use crate::linalg::Matrix;
use crate::poly::{falling, PiecewisePoly};
use crate::problem::{
    bvp_residual, operator_l_lifted, operator_l_weights_lifted, rhs_m_lifted, DerivativeJet, Lift,
    ProblemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScheme {
    Uniform,
    Chebyshev,
}

impl std::str::FromStr for GridScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(GridScheme::Uniform),
            "chebyshev" => Ok(GridScheme::Chebyshev),
            other => Err(format!("unknown grid scheme `{other}` (uniform|chebyshev)")),
        }
    }
}

impl std::fmt::Display for GridScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GridScheme::Uniform => "uniform",
            GridScheme::Chebyshev => "chebyshev",
        })
    }
}

/// Strictly increasing collocation points in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationGrid {
    pub points: Vec<f64>,
    pub scheme: GridScheme,
}

pub const MIN_GRID_POINTS: usize = 4;

impl CollocationGrid {
    pub fn new(n: usize, scheme: GridScheme) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_GRID_POINTS} points, got {n}"
            )));
        }
        let points = match scheme {
            GridScheme::Uniform => (1..=n).map(|i| i as f64 / n as f64).collect(),
            GridScheme::Chebyshev => (1..=n)
                .map(|i| 0.5 * (1.0 - (i as f64 * std::f64::consts::PI / n as f64).cos()))
                .collect(),
        };
        Ok(Self { points, scheme })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, GridScheme::Uniform)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `Ψ_i` for the point `xi`: the `W₂⁵` kernel with `L` applied in its first slot.
pub fn basis_function(
    params: &ProblemParams,
    lift: Lift,
    kernel: &BivariateKernel,
    xi: f64,
) -> PiecewisePoly {
    let w = operator_l_weights_lifted(params, lift, xi);
    let size = kernel.lower.len();
    // L applied to sᵇ at s = xi
    let l_mono: Vec<f64> = (0..size)
        .map(|b| {
            w.iter()
                .enumerate()
                .filter(|(k, wk)| **wk != 0.0 && *k <= b)
                .map(|(k, wk)| wk * falling(b, k) * xi.powi((b - k) as i32))
                .sum()
        })
        .collect();

    // x ≤ xi: K(xi, x) = Σ lower[a][b] xᵃ xiᵇ
    let lower = kernel
        .lower
        .iter()
        .map(|row| row.iter().zip(&l_mono).map(|(c, l)| c * l).sum())
        .collect();
    // x > xi: K(xi, x) = Σ lower[a][b] xiᵃ xᵇ
    let upper = (0..size)
        .map(|b| (0..size).map(|a| kernel.lower[a][b] * l_mono[a]).sum())
        .collect();
    PiecewisePoly::new(xi, lower, upper)
}

/// `Ψ_1 … Ψ_n` on the grid. `kernel` must be the `W₂⁵` kernel.
pub fn build_basis(
    params: &ProblemParams,
    lift: Lift,
    grid: &CollocationGrid,
    kernel: &BivariateKernel,
) -> Vec<PiecewisePoly> {
    assert_eq!(kernel.order, SpaceSpec::w25().order(), "basis needs the W2^5 kernel");
    grid.points
        .iter()
        .map(|&xi| basis_function(params, lift, kernel, xi))
        .collect()
}

/// `(L f)(x)` for a piecewise polynomial `f`.
pub fn apply_operator(params: &ProblemParams, lift: Lift, f: &PiecewisePoly, x: f64) -> f64 {
    let w = operator_l_weights_lifted(params, lift, x);
    (0..5).map(|k| w[k] * f.eval_deriv(x, k)).sum()
}

/// Basis together with its Gram matrix and orthonormalizing coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub psi: Vec<PiecewisePoly>,
    pub gram: Matrix,
    /// Lower triangular, positive diagonal: `Ψ̄_i = Σ_{k≤i} beta[i][k] Ψ_k`.
    pub beta: Matrix,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// `max |β G βᵀ - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let bg = self.beta.matmul(&self.gram);
        let bgbt = bg.matmul(&self.beta.transpose());
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((bgbt[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Relative size below which a Gram–Schmidt residual counts as numerically zero.
const GS_BREAKDOWN: f64 = 1e-13;

pub fn gram_matrix(params: &ProblemParams, lift: Lift, psi: &[PiecewisePoly]) -> Matrix {
    let n = psi.len();
    let mut gram = Matrix::zeros(n);
    for i in 0..n {
        let xi = psi[i].breakpoint;
        for j in 0..n {
            gram[(i, j)] = apply_operator(params, lift, &psi[j], xi);
        }
    }
    gram
}

/// Fills the Gram matrix from `G_ij = (L Ψ_j)(x_i)` and orthonormalizes by
/// modified Gram–Schmidt with one reorthogonalization pass.
pub fn gram_and_orthonormalize(
    params: &ProblemParams,
    lift: Lift,
    psi: Vec<PiecewisePoly>,
) -> Result<BasisSet> {
    if psi.is_empty() {
        return Err(Error::InvalidGrid("empty basis".into()));
    }
    let gram = gram_matrix(params, lift, &psi);
    let beta = orthonormalize(&gram)?;
    Ok(BasisSet { psi, gram, beta })
}

/// Rows of the returned matrix are coefficient vectors of an orthonormal
/// system in the inner product `⟨a, b⟩ = aᵀ G b`.
pub fn orthonormalize(gram: &Matrix) -> Result<Matrix> {
    let n = gram.dim();
    let mut beta = Matrix::zeros(n);
    // G q_k for every accepted q_k
    let mut g_q: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for _pass in 0..2 {
            for k in 0..i {
                let proj: f64 = v[..=i].iter().zip(&g_q[k]).map(|(a, b)| a * b).sum();
                for (vj, qj) in v[..=k].iter_mut().zip(beta.row(k)) {
                    *vj -= proj * qj;
                }
            }
        }
        let gv = gram.mul_vec(&v);
        let norm_sq: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
        if !(norm_sq > GS_BREAKDOWN * gram[(i, i)].abs()) {
            return Err(Error::NotPositiveDefinite { index: i, norm_sq });
        }
        let inv = 1.0 / norm_sq.sqrt();
        for j in 0..=i {
            beta[(i, j)] = v[j] * inv;
        }
        g_q.push(gv.iter().map(|g| g * inv).collect());
    }
    Ok(beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub lift: Lift,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            relaxation: 1.0,
            lift: Lift::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkhsmSolution {
    pub params: ProblemParams,
    pub lift: Lift,
    pub grid: CollocationGrid,
    pub psi: Vec<PiecewisePoly>,
    /// `u_n = Σ_k combined_coeffs[k] Ψ_k`
    pub combined_coeffs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_update_norm: f64,
    /// Relaxation in effect when the iteration stopped.
    pub relaxation: f64,
    pub diverged: bool,
}

/// Builds the kernel, basis and Gram data, then iterates.
pub fn solve(params: &ProblemParams, grid: &CollocationGrid, opts: &SolveOptions) -> Result<RkhsmSolution> {
    let kernel = crate::kernel::derive_kernel(&SpaceSpec::w25())?;
    solve_with_kernel(params, grid, opts, &kernel)
}

pub fn solve_with_kernel(
    params: &ProblemParams,
    grid: &CollocationGrid,
    opts: &SolveOptions,
    kernel: &BivariateKernel,
) -> Result<RkhsmSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive (got {})", opts.tol)));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "relaxation must lie in (0, 1] (got {})",
            opts.relaxation
        )));
    }
    let psi = build_basis(params, opts.lift, grid, kernel);
    let basis = gram_and_orthonormalize(params, opts.lift, psi)?;
    Ok(iterate(params, grid, &basis, opts))
}

/// Damped fixed-point iteration on a prepared basis.
pub fn iterate(
    params: &ProblemParams,
    grid: &CollocationGrid,
    basis: &BasisSet,
    opts: &SolveOptions,
) -> RkhsmSolution {
    let n = basis.len();
    let pts = &grid.points;
    // Ψ_l(x_k) and Ψ_l'''(x_k)
    let values = Matrix::from_fn(n, |k, l| basis.psi[l].eval(pts[k]));
    let thirds = Matrix::from_fn(n, |k, l| basis.psi[l].eval_deriv(pts[k], 3));

    let mut coeffs = vec![0.0; n];
    let mut relaxation = opts.relaxation;
    let mut halved = false;
    let mut growth_streak = 0;
    let mut last_norm = f64::INFINITY;
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let u = values.mul_vec(&coeffs);
        let u3 = thirds.mul_vec(&coeffs);
        let rhs: Vec<f64> = (0..n).map(|k| rhs_m_lifted(params, opts.lift, pts[k], u[k], u3[k])).collect();
        // A = β rhs, then fold β back in: c* = βᵀ A.
        let project = |r: &[f64]| basis.beta.tr_mul_vec(&basis.beta.mul_vec(r));
        let mut target = project(&rhs);
        // One refinement step against G c* = rhs recovers digits lost to
        // the conditioning of G.
        let lu: Vec<f64> = basis.gram.mul_vec(&target);
        let resid: Vec<f64> = rhs.iter().zip(&lu).map(|(r, l)| r - l).collect();
        for (t, d) in target.iter_mut().zip(project(&resid)) {
            *t += d;
        }

        let next: Vec<f64> = coeffs
            .iter()
            .zip(&target)
            .map(|(c, t)| (1.0 - relaxation) * c + relaxation * t)
            .collect();
        let delta: Vec<f64> = next.iter().zip(&coeffs).map(|(a, b)| a - b).collect();
        let update_norm = values
            .mul_vec(&delta)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        coeffs = next;

        if !update_norm.is_finite() {
            diverged = true;
            last_norm = update_norm;
            break;
        }
        if update_norm <= opts.tol {
            converged = true;
            last_norm = update_norm;
            break;
        }
        if update_norm > last_norm {
            growth_streak += 1;
        } else {
            growth_streak = 0;
        }
        last_norm = update_norm;
        if growth_streak >= 3 {
            if halved {
                diverged = true;
                break;
            }
            relaxation *= 0.5;
            halved = true;
            growth_streak = 0;
        }
    }

    RkhsmSolution {
        params: *params,
        lift: opts.lift,
        grid: grid.clone(),
        psi: basis.psi.clone(),
        combined_coeffs: coeffs,
        iterations,
        converged,
        final_update_norm: last_norm,
        relaxation,
        diverged,
    }
}

impl RkhsmSolution {
    /// `u_n^(k)(x)` without the lift. Any `k` is accepted.
    pub fn remainder_deriv(&self, x: f64, k: usize) -> f64 {
        self.psi
            .iter()
            .zip(&self.combined_coeffs)
            .map(|(p, c)| c * p.eval_deriv(x, k))
            .sum()
    }

    /// `F^(k)(x) = u_n^(k)(x) + g^(k)(x)` for `k ≤ 3`.
    pub fn eval(&self, x: f64, deriv: usize) -> Result<f64> {
        if deriv > 3 {
            return Err(Error::InvalidParams(format!(
                "solution derivatives are available up to order 3 (asked for {deriv})"
            )));
        }
        Ok(self.remainder_deriv(x, deriv) + self.lift.deriv(x, deriv))
    }

    /// Jet of `F` through the fourth derivative.
    pub fn jet(&self, x: f64) -> DerivativeJet {
        let g = self.lift.jet(x);
        DerivativeJet::from_fn(x, |k| self.remainder_deriv(x, k) + g.d(k))
    }

    /// Jet of `u_n` alone.
    pub fn remainder_jet(&self, x: f64) -> DerivativeJet {
        DerivativeJet::from_fn(x, |k| self.remainder_deriv(x, k))
    }

    /// `max |F'''' - m² F'' + Re F F'''|` over `sample_count` points placed
    /// at cell midpoints and moved off any collocation point.
    pub fn residual_norm(&self, sample_count: usize) -> f64 {
        residual_samples(&self.grid, sample_count)
            .into_iter()
            .map(|x| bvp_residual(&self.params, &self.jet(x)).abs())
            .fold(0.0, f64::max)
    }
}

pub const MIN_RESIDUAL_SAMPLES: usize = 16;

/// Midpoints `(j + ½)/count`; any that land on a grid point are nudged by a
/// quarter cell.
pub fn residual_samples(grid: &CollocationGrid, count: usize) -> Vec<f64> {
    let count = count.max(MIN_RESIDUAL_SAMPLES);
    let h = 1.0 / count as f64;
    (0..count)
        .map(|j| {
            let x = (j as f64 + 0.5) * h;
            if grid.points.iter().any(|p| (p - x).abs() < 1e-9) {
                x + 0.25 * h
            } else {
                x
            }
        })
        .collect()
}

/// Exact `⟨Ψ_i, Ψ_j⟩` from the definition of the `W₂⁵` inner product.
pub fn definitional_gram(psi: &[PiecewisePoly]) -> Matrix {
    let spec = SpaceSpec::w25();
    Matrix::from_fn(psi.len(), |i, j| crate::kernel::inner_product(&spec, &psi[i], &psi[j]))
}

/// `max_k |(L u_n)(x_k) - M(x_k, u_n(x_k), u_n'''(x_k))|`.
pub fn collocation_defect(sol: &RkhsmSolution) -> f64 {
    sol.grid
        .points
        .iter()
        .map(|&x| {
            let jet = sol.remainder_jet(x);
            let lu = operator_l_lifted(&sol.params, sol.lift, &jet);
            (lu - rhs_m_lifted(&sol.params, sol.lift, x, jet.d(0), jet.d(3))).abs()
        })
        .fold(0.0, f64::max)
}
