//! Published reference values for six `(m, Re)` cases, embedded at printed
//! precision. Each case pairs a results table (RK-4 and RKHSM columns) with a
//! comparison table (RK-4, OHAM and RKHSM); the shared columns are stored once.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATA: &str = include_str!("../data/reference_tables.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub x: f64,
    pub rk4: f64,
    pub oham: f64,
    pub rkhsm: f64,
    /// The RKHSM column as printed (up to 20 digits).
    pub rkhsm_text: String,
    pub suspect: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCase {
    pub m: f64,
    pub re: f64,
    pub results_table: String,
    pub comparison_table: String,
    pub rows: Vec<ReferenceRow>,
}

impl ReferenceCase {
    pub fn table_ids(&self) -> [&str; 2] {
        [&self.results_table, &self.comparison_table]
    }

    pub fn matches(&self, m: f64, re: f64) -> bool {
        self.m == m && self.re == re
    }

    /// Row at `x`, if one was printed.
    pub fn row_at(&self, x: f64) -> Option<&ReferenceRow> {
        self.rows.iter().find(|r| (r.x - x).abs() < 1e-12)
    }
}

#[derive(Deserialize)]
struct RawRow {
    x: String,
    rk4: String,
    oham: String,
    rkhsm: String,
    suspect: bool,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Deserialize)]
struct RawCase {
    m: f64,
    re: f64,
    results_table: String,
    comparison_table: String,
    rows: Vec<RawRow>,
}

#[derive(Deserialize)]
struct RawFile {
    cases: Vec<RawCase>,
}

fn number(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::ReferenceData(format!("unparsable {what} value `{text}`")))
}

fn parse(text: &str) -> Result<Vec<ReferenceCase>> {
    let raw: RawFile =
        serde_json::from_str(text).map_err(|e| Error::ReferenceData(e.to_string()))?;
    raw.cases
        .into_iter()
        .map(|c| {
            let rows = c
                .rows
                .into_iter()
                .map(|r| {
                    Ok(ReferenceRow {
                        x: number(&r.x, "x")?,
                        rk4: number(&r.rk4, "RK-4")?,
                        oham: number(&r.oham, "OHAM")?,
                        rkhsm: number(&r.rkhsm, "RKHSM")?,
                        rkhsm_text: r.rkhsm,
                        suspect: r.suspect,
                        note: r.note,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ReferenceCase {
                m: c.m,
                re: c.re,
                results_table: c.results_table,
                comparison_table: c.comparison_table,
                rows,
            })
        })
        .collect()
}

/// All embedded cases, in table order.
pub fn reference_cases() -> &'static [ReferenceCase] {
    static CASES: OnceLock<Vec<ReferenceCase>> = OnceLock::new();
    CASES.get_or_init(|| parse(DATA).expect("embedded reference data is well formed"))
}

/// The case printed under `table_id` (`"4.1"` … `"4.12"`).
pub fn case_for_table(table_id: &str) -> Result<&'static ReferenceCase> {
    let id = table_id.trim();
    reference_cases()
        .iter()
        .find(|c| c.table_ids().contains(&id))
        .ok_or_else(|| Error::UnknownTable(id.to_string()))
}

pub fn case_for_params(m: f64, re: f64) -> Option<&'static ReferenceCase> {
    reference_cases().iter().find(|c| c.matches(m, re))
}
