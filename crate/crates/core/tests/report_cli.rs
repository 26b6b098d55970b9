use std::process::Command;

use rkhs_squeeze::reference::case_for_table;
use rkhs_squeeze::report::{
    compare_with_paper, emit, parse_config, parse_sweep, run_case, sweep, CaseReport, OutputFormat,
    ReportRow, RunConfig, CSV_HEADER,
};
use rkhs_squeeze::Error;

fn case(m: f64, re: f64) -> CaseReport {
    run_case(&RunConfig::with_params(m, re)).unwrap()
}

fn row(report: &CaseReport, x: f64) -> &ReportRow {
    report.rows.iter().find(|r| (r.x - x).abs() < 1e-12).unwrap()
}

#[test]
fn published_values_at_print_precision() {
    let r = case(1.0, 1.0);
    let at = row(&r, 0.1);
    assert!((at.f_rkhsm - 0.150294).abs() < 1e-5);
    assert_eq!(at.f_paper_rk4, Some(0.150294));

    let r = case(3.0, 1.0);
    assert!((row(&r, 0.5).f_rkhsm - 0.650756).abs() < 1e-5);
}

#[test]
fn stokes_report_matches_closed_form() {
    let r = case(0.0, 0.0);
    assert!(r.solver_meta.converged);
    assert!(r.reference_tables.is_none());
    for row in &r.rows {
        let exact = 0.5 * (3.0 * row.x - row.x.powi(3));
        assert!((row.f_rkhsm - exact).abs() < 1e-12);
        assert!(row.abs_err <= 1e-9);
        assert_eq!(row.f_paper_rk4, None);
    }
}

#[test]
fn error_columns_are_recomputed() {
    let r = case(1.0, 4.0);
    for row in &r.rows {
        assert_eq!(row.abs_err, (row.f_rkhsm - row.f_oracle).abs());
    }
}

#[test]
fn csv_layout() {
    let r = case(0.0, 0.0);
    let text = emit(&r, OutputFormat::Csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[3], "");
    assert_eq!(first[4], "");
    // 17 significant digits
    let v = lines.nth(4).unwrap().split(',').nth(1).unwrap();
    assert_eq!(v.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn csv_is_deterministic() {
    let c = RunConfig::with_params(3.0, 1.0);
    let a = emit(&run_case(&c).unwrap(), OutputFormat::Csv).unwrap();
    let b = emit(&run_case(&c).unwrap(), OutputFormat::Csv).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_values_round_trip() {
    let r = case(1.0, 1.0);
    let text = emit(&r, OutputFormat::Csv).unwrap();
    for (line, row) in text.lines().skip(1).zip(&r.rows) {
        let f: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(f, row.f_rkhsm);
    }
}

#[test]
fn markdown_boundary_row() {
    let text = emit(&case(1.0, 1.0), OutputFormat::Markdown).unwrap();
    let last = text.lines().find(|l| l.starts_with("| 1.0 |")).unwrap();
    let cols: Vec<&str> = last.split('|').map(str::trim).collect();
    // x, oracle, rkhsm, abs, rel, printed rk4, printed oham
    assert_eq!(cols[2], "1.0");
    assert_eq!(cols[3], "1.0");
    assert_eq!(cols[6], "1.0");
    assert_eq!(cols[7], "1.0");
    assert!(text.contains("u_r = (r/2) F'(z), u_z = -F(z)"));
}

#[test]
fn json_round_trip() {
    let r = case(8.0, 1.0);
    let text = emit(&r, OutputFormat::Json).unwrap();
    let back: CaseReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    assert!(text.contains("solver_meta") && text.contains("typo_report"));
}

#[test]
fn comparison_with_published_tables() {
    let r = case(8.0, 1.0);
    let cmp = compare_with_paper(&r, "4.5").unwrap();
    assert_eq!(case_for_table("4.5").unwrap().row_at(0.9).unwrap().rk4, 0.965578);
    assert!(cmp.max_oracle_vs_printed_rk4 < 1e-5);
    assert!(matches!(
        compare_with_paper(&r, "4.1"),
        Err(Error::TableMismatch { .. })
    ));
    assert!(matches!(compare_with_paper(&r, "9.9"), Err(Error::UnknownTable(_))));
}

#[test]
fn suspect_rows_are_excluded_from_the_maximum() {
    let mut r = case(1.0, 10.0);
    // poison the flagged row; the maximum must not see it
    for row in r.rows.iter_mut().filter(|row| (row.x - 0.8).abs() < 1e-12) {
        row.f_oracle += 1.0;
        row.f_rkhsm += 1.0;
    }
    let cmp = compare_with_paper(&r, "4.12").unwrap();
    let flagged = cmp.rows.iter().find(|c| (c.x - 0.8).abs() < 1e-12).unwrap();
    assert!(flagged.suspect);
    assert!(flagged.oracle_vs_printed_rk4 > 0.5);
    assert!(cmp.max_oracle_vs_printed_rk4 < 1e-3);
}

#[test]
fn embedded_data_against_itself() {
    let mut r = case(1.0, 1.0);
    let table = case_for_table("4.1").unwrap();
    for row in &mut r.rows {
        let printed = table.row_at(row.x).unwrap();
        row.f_rkhsm = printed.rkhsm;
        row.f_oracle = printed.rk4;
    }
    let cmp = compare_with_paper(&r, "4.1").unwrap();
    assert_eq!(cmp.max_rkhsm_vs_printed, 0.0);
    assert_eq!(cmp.max_oracle_vs_printed_rk4, 0.0);
}

#[test]
fn sweep_preserves_order_and_isolates_failures() {
    let good = RunConfig::with_params(1.0, 1.0);
    let mut bad = RunConfig::with_params(1.0, 1.0);
    bad.n = 2;
    let out = sweep(&[RunConfig::with_params(3.0, 1.0), bad, good.clone(), good.clone()]);
    assert_eq!(out.len(), 4);
    assert_eq!(out[0].as_ref().unwrap().config.m, 3.0);
    assert!(out[1].is_err());
    let (a, b) = (out[2].as_ref().unwrap(), out[3].as_ref().unwrap());
    assert_eq!(a.rows, b.rows);

    let single = run_case(&good).unwrap();
    assert_eq!(single.rows, a.rows);
}

#[test]
fn config_files() {
    let c = parse_config("m=1\nre=1").unwrap();
    assert_eq!((c.n, c.tol, c.oracle_steps), (32, 1e-12, 2000));
    let err = parse_config("m=-1").unwrap_err().to_string();
    assert!(err.contains("line 1") && err.contains("m must be finite and nonnegative"), "{err}");
    let d = parse_config("").unwrap();
    assert_eq!((d.m, d.re), (1.0, 1.0));
    assert_eq!(parse_sweep("m=1\n---\nm=3\nre=4\n").unwrap().len(), 2);
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rkhs-squeeze"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_solve_and_exit_codes() {
    let out = cli(&["solve", "--m", "1", "--re", "1", "--n", "16"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(CSV_HEADER));

    assert_eq!(cli(&["solve", "--n", "2"]).status.code(), Some(2));
    assert_eq!(cli(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["table", "--id", "4.99"]).status.code(), Some(2));
    // one iteration cannot meet the update tolerance for a nonlinear case
    assert_eq!(cli(&["solve", "--max-iter", "1"]).status.code(), Some(3));
}

#[test]
fn cli_writes_to_file_and_reads_config() {
    let dir = std::env::temp_dir().join(format!("rkhs-squeeze-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("case.cfg");
    std::fs::write(&cfg, "# Stokes\nm = 0\nre = 0\nn = 8\nformat = json\n").unwrap();
    let out = dir.join("out.json");
    let status = cli(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(0));
    let report: CaseReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.config.n, 8);

    std::fs::write(&cfg, "m = 1\ncolour = blue\n").unwrap();
    let bad = cli(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cli_kernel_dump() {
    let out = cli(&["kernel", "--space", "w25", "--y", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let d1 = text.lines().find(|l| l.starts_with("d,1,")).unwrap();
    let fields: Vec<&str> = d1.split(',').collect();
    let expect = 0.5f64.powi(9) / 362880.0;
    assert!((fields[3].parse::<f64>().unwrap() - expect).abs() < 1e-15 * expect);
    // zero up to roundoff on the scale of the largest coefficient (~1e-4)
    assert!((fields[2].parse::<f64>().unwrap() - expect).abs() < 1e-18);
    assert!(fields[4].parse::<f64>().unwrap() < 1e-18);
    assert!(text.contains("suspected typos:\n  c9"));

    let w24 = String::from_utf8_lossy(&cli(&["kernel", "--space", "w24", "--y", "0.5"]).stdout).to_string();
    assert!(w24.contains("suspected typos: none"));
}
