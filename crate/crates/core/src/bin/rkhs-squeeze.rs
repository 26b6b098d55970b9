use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rkhs_squeeze::problem::Lift;
use rkhs_squeeze::reference::case_for_table;
use rkhs_squeeze::report::{
    compare_with_paper, dump_kernel, emit, emit_comparison, parse_config, parse_sweep,
    published_configs, recommended_n, run_case, sweep, CaseReport, OutputFormat, RunConfig,
};
use rkhs_squeeze::solver::GridScheme;
use rkhs_squeeze::verify::Suite;
use rkhs_squeeze::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "rkhs-squeeze", version, about = "Reproducing-kernel solver for the MHD squeezing-flow problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and compare it with the shooting oracle.
    Solve(SolveArgs),
    /// Run every case of a config file (blocks separated by `---`);
    /// without a file, the six published cases.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Print only the PASS/FAIL lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Reproduce one published table, e.g. `--id 4.3`.
    Table {
        #[arg(long)]
        id: String,
        #[arg(long, default_value = "markdown")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print kernel coefficients at `y` beside the printed ones.
    Kernel {
        #[arg(long, default_value = "w25")]
        space: String,
        #[arg(long)]
        y: f64,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Base config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    re: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    relaxation: Option<f64>,
    #[arg(long)]
    grid: Option<GridScheme>,
    #[arg(long)]
    lift: Option<Lift>,
    #[arg(long)]
    oracle_steps: Option<usize>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. }
        | Error::InvalidParams(_)
        | Error::InvalidGrid(_)
        | Error::InvalidSpace(_)
        | Error::UnknownTable(_)
        | Error::TableMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_NO_CONVERGENCE,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidParams(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn not_converged(report: &CaseReport) -> bool {
    !report.solver_meta.converged
}

fn solve(args: SolveArgs) -> Result<u8, Error> {
    let mut config = match &args.config {
        Some(path) => parse_config(&read(path)?)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                config.$field = v;
            }
        )*};
    }
    set!(m, re, n, tol, max_iter, relaxation, grid, lift, oracle_steps, format);
    config.validate().map_err(Error::InvalidParams)?;

    let report = run_case(&config)?;
    write_output(&emit(&report, config.format)?, args.out.as_deref())?;
    if not_converged(&report) {
        eprintln!(
            "solver did not converge: {} iterations, last update {:.3e}",
            report.solver_meta.iterations, report.solver_meta.final_update_norm
        );
        return Ok(EXIT_NO_CONVERGENCE);
    }
    Ok(0)
}

fn run_sweep(config: Option<PathBuf>, format: Option<OutputFormat>, out: Option<PathBuf>) -> Result<u8, Error> {
    let configs = match &config {
        Some(path) => parse_sweep(&read(path)?)?,
        None => published_configs(),
    };
    let results = sweep(&configs);
    let mut status = 0;
    let mut text = String::new();
    let mut json = Vec::new();
    for (config, result) in configs.iter().zip(results) {
        let format = format.unwrap_or(config.format);
        match result {
            Ok(report) => {
                if not_converged(&report) {
                    eprintln!("m={}, re={}: solver did not converge", config.m, config.re);
                    status = EXIT_NO_CONVERGENCE;
                }
                match format {
                    OutputFormat::Json => json.push(report),
                    OutputFormat::Csv => {
                        text.push_str(&format!("# m={}, re={}, n={}\n", config.m, config.re, config.n));
                        text.push_str(&emit(&report, format)?);
                    }
                    OutputFormat::Markdown => {
                        text.push_str(&emit(&report, format)?);
                        text.push('\n');
                    }
                }
            }
            Err(e) => {
                eprintln!("m={}, re={}: {e}", config.m, config.re);
                status = status.max(exit_code(&e));
            }
        }
    }
    if !json.is_empty() {
        let rendered = serde_json::to_string_pretty(&json)
            .map_err(|e| Error::InvalidParams(format!("cannot serialize reports: {e}")))?;
        text.push_str(&rendered);
        text.push('\n');
    }
    write_output(&text, out.as_deref())?;
    Ok(status)
}

fn verify(quiet: bool) -> Result<u8, Error> {
    let suite = Suite::new()?;
    let outcomes = suite.run_all();
    for o in &outcomes {
        println!("{}", o.summary_line());
        if !quiet {
            print!("{}", o.details());
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    Ok(if failed == 0 { 0 } else { EXIT_VERIFY })
}

fn table(id: &str, format: OutputFormat, out: Option<PathBuf>) -> Result<u8, Error> {
    let case = case_for_table(id)?;
    let config = RunConfig {
        n: recommended_n(case.m),
        format,
        ..RunConfig::with_params(case.m, case.re)
    };
    let report = run_case(&config)?;
    let mut text = emit(&report, format)?;
    if format != OutputFormat::Json {
        text.push('\n');
        text.push_str(&emit_comparison(&compare_with_paper(&report, id)?));
    }
    write_output(&text, out.as_deref())?;
    Ok(if not_converged(&report) { EXIT_NO_CONVERGENCE } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep { config, format, out } => run_sweep(config, format, out),
        Command::Verify { quiet } => verify(quiet),
        Command::Table { id, format, out } => table(&id, format, out),
        Command::Kernel { space, y } => dump_kernel(&space, y).map(|text| {
            print!("{text}");
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
