//! Run configuration, per-case reports and their text renderings.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{derive_kernel, SpaceSpec};
use crate::oracles::{shoot, ShootOptions, MIN_STEPS};
use crate::problem::{Lift, ProblemParams};
use crate::reference::{case_for_params, case_for_table};
use crate::solver::{solve_with_kernel, CollocationGrid, GridScheme, SolveOptions, MIN_GRID_POINTS};
use crate::typos::{kernel_deviations, typo_report, TypoReport, SUSPECT_RELATIVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Markdown,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (csv|markdown|json)")),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "markdown",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m: f64,
    pub re: f64,
    pub n: usize,
    pub grid: GridScheme,
    pub lift: Lift,
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub oracle_steps: usize,
    pub format: OutputFormat,
    pub eval_points: Vec<f64>,
}

pub fn default_eval_points() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        let solve = SolveOptions::default();
        Self {
            m: 1.0,
            re: 1.0,
            n: 32,
            grid: GridScheme::Uniform,
            lift: solve.lift,
            tol: solve.tol,
            max_iter: solve.max_iter,
            relaxation: solve.relaxation,
            oracle_steps: ShootOptions::default().steps,
            format: OutputFormat::Csv,
            eval_points: default_eval_points(),
        }
    }
}

impl RunConfig {
    pub fn with_params(m: f64, re: f64) -> Self {
        Self {
            m,
            re,
            ..Self::default()
        }
    }

    /// Checks every field; the message names the offending key.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.field_errors().into_iter().next() {
            Some((_, message)) => Err(message),
            None => Ok(()),
        }
    }

    fn field_errors(&self) -> Vec<(&'static str, String)> {
        let mut errors = Vec::new();
        if !self.m.is_finite() || self.m < 0.0 {
            errors.push(("m", format!("m must be finite and nonnegative (got {})", self.m)));
        }
        if !self.re.is_finite() {
            errors.push(("re", format!("re must be finite (got {})", self.re)));
        }
        if self.n < MIN_GRID_POINTS {
            errors.push(("n", format!("n must be at least {MIN_GRID_POINTS} (got {})", self.n)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            errors.push(("tol", format!("tol must be positive (got {})", self.tol)));
        }
        if self.max_iter == 0 {
            errors.push(("max_iter", "max_iter must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            errors.push((
                "relaxation",
                format!("relaxation must lie in (0, 1] (got {})", self.relaxation),
            ));
        }
        if self.oracle_steps < MIN_STEPS {
            errors.push((
                "oracle_steps",
                format!("oracle_steps must be at least {MIN_STEPS} (got {})", self.oracle_steps),
            ));
        }
        if self.eval_points.is_empty() {
            errors.push(("eval_points", "eval_points must not be empty".into()));
        }
        if let Some(x) = self.eval_points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            errors.push(("eval_points", format!("eval_points must lie in [0, 1] (got {x})")));
        }
        errors
    }

    pub fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.m, self.re)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            relaxation: self.relaxation,
            lift: self.lift,
        }
    }

    pub fn shoot_options(&self) -> ShootOptions {
        ShootOptions {
            steps: self.oracle_steps,
            ..ShootOptions::default()
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::Config {
        line,
        message: format!("bad value `{value}` for `{key}`: {e}"),
    })
}

fn apply_line(config: &mut RunConfig, line: usize, key: &str, value: &str) -> Result<()> {
    match key {
        "m" => config.m = parse_value(line, key, value)?,
        "re" => config.re = parse_value(line, key, value)?,
        "n" => config.n = parse_value(line, key, value)?,
        "grid" | "grid_scheme" => config.grid = parse_value(line, key, value)?,
        "lift" => config.lift = parse_value(line, key, value)?,
        "tol" => config.tol = parse_value(line, key, value)?,
        "max_iter" => config.max_iter = parse_value(line, key, value)?,
        "relaxation" => config.relaxation = parse_value(line, key, value)?,
        "oracle_steps" => config.oracle_steps = parse_value(line, key, value)?,
        "format" | "output_format" => config.format = parse_value(line, key, value)?,
        "eval_points" => {
            config.eval_points = value
                .split(',')
                .map(|v| parse_value(line, key, v.trim()))
                .collect::<Result<_>>()?
        }
        _ => {
            return Err(Error::Config {
                line,
                message: format!("unknown key `{key}`"),
            })
        }
    }
    if let Some((_, message)) = config.field_errors().into_iter().find(|(k, _)| *k == key) {
        return Err(Error::Config { line, message });
    }
    Ok(())
}

/// Parses `key = value` lines; `#` starts a comment. Absent keys keep their
/// defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_block(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn parse_block<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let mut last_line = 0;
    for (number, raw) in lines {
        last_line = number;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: number,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        apply_line(&mut config, number, key.trim(), value.trim())?;
    }
    config
        .validate()
        .map_err(|message| Error::Config {
            line: last_line,
            message,
        })?;
    Ok(config)
}

/// A sweep file: several config blocks separated by lines holding `---`.
pub fn parse_sweep(text: &str) -> Result<Vec<RunConfig>> {
    let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
    for (i, line) in text.lines().enumerate() {
        if line.trim() == "---" {
            blocks.push(Vec::new());
        } else {
            blocks.last_mut().expect("nonempty").push((i + 1, line));
        }
    }
    blocks
        .into_iter()
        .filter(|b| b.iter().any(|(_, l)| !l.split('#').next().unwrap_or("").trim().is_empty()))
        .map(|b| parse_block(b.into_iter()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub x: f64,
    pub f_rkhsm: f64,
    pub f_oracle: f64,
    pub f_paper_rk4: Option<f64>,
    pub f_paper_oham: Option<f64>,
    pub abs_err: f64,
    /// `abs_err / |f_oracle|`, or `abs_err` where the oracle value is zero.
    pub rel_err: f64,
}

impl ReportRow {
    pub fn new(x: f64, f_rkhsm: f64, f_oracle: f64, paper: Option<(f64, f64)>) -> Self {
        let abs_err = (f_rkhsm - f_oracle).abs();
        let rel_err = if f_oracle == 0.0 {
            abs_err
        } else {
            abs_err / f_oracle.abs()
        };
        Self {
            x,
            f_rkhsm,
            f_oracle,
            f_paper_rk4: paper.map(|p| p.0),
            f_paper_oham: paper.map(|p| p.1),
            abs_err,
            rel_err,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub final_update_norm: f64,
    pub relaxation: f64,
    pub residual_norm: f64,
    pub oracle_slopes: (f64, f64),
    pub oracle_newton_iters: usize,
    pub oracle_terminal_residual: (f64, f64),
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub kernel: f64,
    pub solve: f64,
    pub oracle: f64,
    pub total: f64,
}

pub const VELOCITY_CONVENTION: &str = "velocities in units of the plate speed V at radius r \
    (units of the half-gap H): u_r = (r/2) F'(z), u_z = -F(z), with F the scaled profile \
    (F = 1 on the plate)";

/// Samples per residual evaluation in reports.
pub const RESIDUAL_SAMPLES: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub config: RunConfig,
    pub rows: Vec<ReportRow>,
    pub solver_meta: SolverMeta,
    pub timing: Timing,
    /// Published tables for these parameters, if any.
    pub reference_tables: Option<[String; 2]>,
    pub velocity_convention: String,
    pub typo_report: TypoReport,
}

impl CaseReport {
    pub fn max_abs_err(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_err).fold(0.0, f64::max)
    }
}

/// Solves one case, runs the shooting oracle and joins published values.
pub fn run_case(config: &RunConfig) -> Result<CaseReport> {
    config.validate().map_err(Error::InvalidParams)?;
    let params = config.params()?;
    let start = Instant::now();

    let kernel = derive_kernel(&SpaceSpec::w25())?;
    let t_kernel = start.elapsed().as_secs_f64();

    let grid = CollocationGrid::new(config.n, config.grid)?;
    let t0 = Instant::now();
    let sol = solve_with_kernel(&params, &grid, &config.solve_options(), &kernel)?;
    let t_solve = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let oracle = shoot(&params, &config.shoot_options())?;
    let t_oracle = t0.elapsed().as_secs_f64();

    let reference = case_for_params(config.m, config.re);
    let rows = config
        .eval_points
        .iter()
        .map(|&x| {
            let paper = reference
                .and_then(|c| c.row_at(x))
                .map(|r| (r.rk4, r.oham));
            let f = sol.eval(x, 0)?;
            Ok(ReportRow::new(x, f, oracle.value_at(x), paper))
        })
        .collect::<Result<Vec<_>>>()?;

    let solver_meta = SolverMeta {
        iterations: sol.iterations,
        converged: sol.converged,
        diverged: sol.diverged,
        final_update_norm: sol.final_update_norm,
        relaxation: sol.relaxation,
        residual_norm: sol.residual_norm(RESIDUAL_SAMPLES),
        oracle_slopes: oracle.slopes,
        oracle_newton_iters: oracle.newton_iters,
        oracle_terminal_residual: oracle.terminal_residual,
    };
    Ok(CaseReport {
        config: config.clone(),
        rows,
        solver_meta,
        timing: Timing {
            kernel: t_kernel,
            solve: t_solve,
            oracle: t_oracle,
            total: start.elapsed().as_secs_f64(),
        },
        reference_tables: reference.map(|c| [c.results_table.clone(), c.comparison_table.clone()]),
        velocity_convention: VELOCITY_CONVENTION.to_string(),
        typo_report: typo_report(0.5)?,
    })
}

/// Runs every config, in parallel, keeping input order. A failing case does
/// not stop the others.
pub fn sweep(configs: &[RunConfig]) -> Vec<Result<CaseReport>> {
    configs.par_iter().map(run_case).collect()
}

/// The six published cases with default settings.
pub fn published_configs() -> Vec<RunConfig> {
    crate::reference::reference_cases()
        .iter()
        .map(|c| RunConfig {
            n: recommended_n(c.m),
            ..RunConfig::with_params(c.m, c.re)
        })
        .collect()
}

/// Grid size used for a published case: 64 for the thin boundary layer at
/// large `m`, 32 otherwise.
pub fn recommended_n(m: f64) -> usize {
    if m >= 20.0 {
        64
    } else {
        32
    }
}

/// 17 significant digits, enough to round-trip binary64.
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Six decimals, with whole numbers shortened to `1.0`.
fn six(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_suffix("00000") {
        Some(whole) if whole.ends_with(".0") => whole.to_string(),
        _ => s,
    }
}

/// Shortest decimal form of a grid coordinate, at least one decimal.
fn coord(v: f64) -> String {
    format!("{v:?}")
}

pub const CSV_HEADER: &str = "x,f_rkhsm,f_oracle,f_paper_rk4,f_paper_oham,abs_err,rel_err";

pub fn emit(report: &CaseReport, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Csv => emit_csv(report),
        OutputFormat::Markdown => emit_markdown(report),
        OutputFormat::Json => serde_json::to_string_pretty(report)
            .map_err(|e| Error::InvalidParams(format!("cannot serialize report: {e}")))?,
    })
}

fn emit_csv(report: &CaseReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let opt = |v: Option<f64>| v.map(full).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            full(r.x),
            full(r.f_rkhsm),
            full(r.f_oracle),
            opt(r.f_paper_rk4),
            opt(r.f_paper_oham),
            full(r.abs_err),
            full(r.rel_err)
        );
    }
    out
}

fn emit_markdown(report: &CaseReport) -> String {
    let c = &report.config;
    let meta = &report.solver_meta;
    let mut out = String::new();
    let _ = writeln!(out, "## m = {}, Re = {}\n", c.m, c.re);
    let _ = writeln!(
        out,
        "n = {} ({} grid, {} lift), {} iterations, converged: {}, residual norm {:.3e}",
        c.n, c.grid, c.lift, meta.iterations, meta.converged, meta.residual_norm
    );
    if let Some([a, b]) = &report.reference_tables {
        let _ = writeln!(out, "published tables {a} and {b}");
    }
    let _ = writeln!(out, "\n{}\n", report.velocity_convention);
    out.push_str("| x | RK-4 (oracle) | RKHSM | Absolute error | Relative error | RK-4 (published) | OHAM (published) |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for r in &report.rows {
        let opt = |v: Option<f64>| v.map(six).unwrap_or_default();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.3e} | {:.3e} | {} | {} |",
            coord(r.x),
            six(r.f_oracle),
            six(r.f_rkhsm),
            r.abs_err,
            r.rel_err,
            opt(r.f_paper_rk4),
            opt(r.f_paper_oham)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub x: f64,
    pub rkhsm_vs_printed: f64,
    pub oracle_vs_printed_rk4: f64,
    pub suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperComparison {
    pub table: String,
    pub rows: Vec<ComparisonRow>,
    /// Maxima over rows not flagged suspect.
    pub max_rkhsm_vs_printed: f64,
    pub max_oracle_vs_printed_rk4: f64,
}

/// Row-by-row deviation of a report from a published table. Rows of the
/// report without a printed counterpart are skipped.
pub fn compare_with_paper(report: &CaseReport, table_id: &str) -> Result<PaperComparison> {
    let case = case_for_table(table_id)?;
    if !case.matches(report.config.m, report.config.re) {
        return Err(Error::TableMismatch {
            table: table_id.to_string(),
            table_m: case.m,
            table_re: case.re,
            m: report.config.m,
            re: report.config.re,
        });
    }
    let rows: Vec<ComparisonRow> = report
        .rows
        .iter()
        .filter_map(|r| {
            case.row_at(r.x).map(|p| ComparisonRow {
                x: r.x,
                rkhsm_vs_printed: (r.f_rkhsm - p.rkhsm).abs(),
                oracle_vs_printed_rk4: (r.f_oracle - p.rk4).abs(),
                suspect: p.suspect,
            })
        })
        .collect();
    let max = |f: fn(&ComparisonRow) -> f64| {
        rows.iter()
            .filter(|r| !r.suspect)
            .map(f)
            .fold(0.0, f64::max)
    };
    Ok(PaperComparison {
        table: table_id.to_string(),
        max_rkhsm_vs_printed: max(|r| r.rkhsm_vs_printed),
        max_oracle_vs_printed_rk4: max(|r| r.oracle_vs_printed_rk4),
        rows,
    })
}

pub fn emit_comparison(cmp: &PaperComparison) -> String {
    let mut out = format!("table {}\nx,rkhsm_vs_printed,oracle_vs_printed_rk4,suspect\n", cmp.table);
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{:.3e},{:.3e},{}",
            coord(r.x),
            r.rkhsm_vs_printed,
            r.oracle_vs_printed_rk4,
            r.suspect
        );
    }
    let _ = writeln!(
        out,
        "max (suspect rows excluded): rkhsm {:.3e}, oracle {:.3e}",
        cmp.max_rkhsm_vs_printed, cmp.max_oracle_vs_printed_rk4
    );
    out
}

/// Derived kernel coefficients at `y` beside the printed ones.
pub fn dump_kernel(space: &str, y: f64) -> Result<String> {
    let spec = match space.trim().to_ascii_lowercase().as_str() {
        "w25" => SpaceSpec::w25(),
        "w24" => SpaceSpec::w24(),
        other => {
            return Err(Error::InvalidSpace(format!(
                "unknown space `{other}` (w25|w24)"
            )))
        }
    };
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidParams(format!("y must lie in (0, 1) (got {y})")));
    }
    let devs = kernel_deviations(&spec, y)?;
    let mut out = format!("{} kernel at y = {y}\npiece,index,derived,printed,deviation\n", spec.name());
    for d in &devs {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3e}",
            d.piece,
            d.index,
            full(d.derived),
            full(d.printed),
            d.deviation
        );
    }
    let suspects: Vec<_> = devs.iter().filter(|d| d.relative() > SUSPECT_RELATIVE).collect();
    if suspects.is_empty() {
        out.push_str("suspected typos: none\n");
    } else {
        out.push_str("suspected typos:\n");
        for d in suspects {
            let _ = writeln!(
                out,
                "  {}{}: printed {:.12e}, derived {:.12e} (relative deviation {:.2e})",
                d.piece,
                d.index,
                d.printed,
                d.derived,
                d.relative()
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = parse_config("m=1\nre=1").unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.tol, 1e-12);
        assert_eq!(c.oracle_steps, 2000);
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::default().eval_points.len(), 11);
    }

    #[test]
    fn config_errors_name_the_line() {
        match parse_config("re = 2\nm=-1") {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains('m') && message.contains("nonnegative"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match parse_config("# comment\nspeed = 3") {
            Err(Error::Config { line: 2, message }) => assert!(message.contains("speed")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("n = many"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("n 3"), Err(Error::Config { line: 1, .. })));
        assert!(parse_config("n = 2").is_err());
        assert!(parse_config("eval_points = 0.5, 1.5").is_err());
        assert!(parse_config("relaxation = 0").is_err());
    }

    #[test]
    fn config_values_and_comments() {
        let c = parse_config(
            "m = 3   # Hartmann\nre=4\ngrid = chebyshev\nlift = exp\nformat = json\neval_points = 0.25, 0.5\n",
        )
        .unwrap();
        assert_eq!((c.m, c.re), (3.0, 4.0));
        assert_eq!(c.grid, GridScheme::Chebyshev);
        assert_eq!(c.lift, Lift::Exponential);
        assert_eq!(c.format, OutputFormat::Json);
        assert_eq!(c.eval_points, vec![0.25, 0.5]);
    }

    #[test]
    fn sweep_blocks() {
        let cs = parse_sweep("m=1\nre=1\n---\n# second\nm=3\n---\n\n").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].m, 3.0);
        match parse_sweep("m=1\n---\nbogus=1") {
            Err(Error::Config { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn number_formats() {
        assert_eq!(six(1.0), "1.0");
        assert_eq!(six(0.6896240001), "0.689624");
        assert_eq!(six(0.29748), "0.297480");
        assert_eq!(six(0.9999999999), "1.0");
        assert_eq!(six(0.0), "0.0");
        assert_eq!(coord(0.1), "0.1");
        assert_eq!(coord(1.0), "1.0");
        assert_eq!(full(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn rel_err_at_zero() {
        let r = ReportRow::new(0.0, 1e-20, 0.0, None);
        assert_eq!(r.rel_err, 1e-20);
        let r = ReportRow::new(0.5, 0.5, 0.25, Some((0.2, 0.3)));
        assert_eq!(r.rel_err, 1.0);
        assert_eq!(r.f_paper_oham, Some(0.3));
    }

    #[test]
    fn recommended_grid() {
        assert_eq!(recommended_n(20.0), 64);
        assert_eq!(recommended_n(8.0), 32);
        assert_eq!(published_configs().len(), 6);
    }

    #[test]
    fn kernel_dump() {
        let text = dump_kernel("w24", 0.5).unwrap();
        assert!(text.contains("suspected typos: none"));
        assert!(dump_kernel("w33", 0.5).is_err());
        assert!(dump_kernel("w25", 1.0).is_err());
    }
}
