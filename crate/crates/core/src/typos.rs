//! Printed kernel coefficients and known misprints, set against values
//! derived in this crate.
//!
//! The printed `W₂⁵` kernel lists `c_i(y)` (piece `x ≤ y`) and `d_i(y)`
//! (piece `x > y`) as coefficients of `x^(i-1)`, each a polynomial in `y`
//! given by exact fractions. They are kept here only for comparison; no
//! computation depends on them.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::{kernel_system_oracle, SpaceSpec};

/// `(numerator, denominator, power of y)`
type Term = (i64, i64, u32);

const PRINTED_C: [&[Term]; 10] = [
    &[],
    &[(-1537, 378141715, 9), (9374, 378141715, 8), (-3932, 75628343, 7), (608, 54020245, 6), (8006, 54020245, 5), (8006, 10804049, 4), (-14592, 10804049, 3), (5201, 10804049, 1)],
    &[],
    &[(16061, 13613101740, 9), (38, 1134425145, 8), (-48487, 1134425145, 7), (10758, 54020245, 6), (-145157, 324121470, 5), (-145157, 64824294, 4), (1509137, 388945764, 3), (-14592, 10804049, 1)],
    &[(1243, 10890481392, 9), (-4003, 217809627840, 8), (-107867, 27226203480, 7), (145157, 7778915280, 6), (-81901, 1944728820, 5), (9493633, 6223132224, 4), (-145157, 64824294, 3), (8006, 10804049, 1)],
    &[(1243, 54452406960, 9), (-4003, 1089048139200, 8), (-107867, 136131017400, 7), (145157, 38894576400, 6), (-81901, 9723644100, 5), (9493633, 31115661120, 4), (-145157, 324121470, 3), (8006, 54020245, 1)],
    &[(-16061, 1633572208800, 9), (-19, 68065508700, 8), (48487, 136131017400, 7), (-1793, 1080404900, 6), (145157, 38894576400, 5), (145157, 7778915280, 4), (-1509137, 46673491680, 3), (608, 54020245, 1)],
    &[(3631, 1905834243600, 9), (983, 762333697440, 8), (-18797, 238229280450, 7), (48487, 136131017400, 6), (-107867, 136131017400, 5), (-107867, 27226203480, 4), (-48487, 1134425145, 3), (1, 10080, 2), (-3932, 75628343, 1)],
    &[(1537, 15246673948800, 9), (-4687, 7623336974400, 8), (983, 7623336974400, 7), (-19, 68065508700, 6), (-4003, 1089048139200, 5), (-4003, 217809627840, 4), (38, 1134425145, 3), (-743, 62231322240, 1)],
    &[(-323, 4288127048100, 9), (1537, 15246673948800, 8), (3631, 1905834243600, 7), (-16061, 1633572208800, 6), (1243, 54452406960, 5), (1243, 10890481392, 4), (16061, 13613101740, 3), (-1537, 378141715, 1), (1, 362880, 0)],
];

const PRINTED_D: [&[Term]; 10] = [
    &[(1, 362880, 9)],
    &[(-1537, 378141715, 9), (-743, 62231322240, 8), (-3932, 75628343, 7), (608, 54020245, 6), (8006, 54020245, 5), (8006, 10804049, 4), (-14592, 10804049, 3), (5201, 10804049, 1)],
    &[(1, 10080, 7)],
    &[(16061, 13613101740, 9), (38, 1134425145, 8), (-48487, 1134425145, 7), (-1509137, 46673491680, 6), (-145157, 324121470, 5), (-145157, 64824294, 4), (1509137, 388945764, 3), (-14592, 10804049, 1)],
    &[(1243, 10890481392, 9), (-4003, 217809627840, 8), (-107867, 27226203480, 7), (145157, 7778915280, 6), (9493633, 31115661120, 5), (9493633, 6223132224, 4), (-145157, 64824294, 3), (8006, 10804049, 1)],
    &[(1243, 54452406960, 9), (-4003, 1089048139200, 8), (-107867, 136131017400, 7), (145157, 38894576400, 6), (-81901, 9723644100, 5), (-81901, 1944728820, 4), (-145157, 324121470, 3), (8006, 54020245, 1)],
    &[(-16061, 1633572208800, 9), (-19, 68065508700, 8), (48487, 136131017400, 7), (-1793, 1080404900, 6), (145157, 38894576400, 5), (145157, 7778915280, 4), (10758, 54020245, 3), (608, 54020245, 1)],
    &[(3631, 1905834243600, 9), (983, 762333697440, 8), (-18797, 238229280450, 7), (48487, 136131017400, 6), (-107867, 136131017400, 5), (-107867, 27226203480, 4), (-48487, 1134425145, 3), (-3932, 75628343, 1)],
    &[(1537, 15246673948800, 9), (-4687, 7623336974400, 8), (983, 7623336974400, 7), (-19, 68065508700, 6), (-4003, 1089048139200, 5), (-4003, 217809627840, 4), (38, 1134425145, 3), (9374, 378141715, 1)],
    &[(-323, 4288127048100, 9), (1537, 15246673948800, 8), (3631, 1905834243600, 7), (-16061, 1633572208800, 6), (1243, 54452406960, 5), (1243, 10890481392, 4), (16061, 13613101740, 3), (-1537, 378141715, 1)],
];

fn eval_terms(terms: &[Term], y: f64) -> f64 {
    terms
        .iter()
        .fold(0.0, |acc, &(num, den, p)| acc + num as f64 / den as f64 * y.powi(p as i32))
}

/// Printed `(c_1(y) … c_10(y), d_1(y) … d_10(y))`.
pub fn printed_w25_coefficients(y: f64) -> (Vec<f64>, Vec<f64>) {
    (
        PRINTED_C.iter().map(|t| eval_terms(t, y)).collect(),
        PRINTED_D.iter().map(|t| eval_terms(t, y)).collect(),
    )
}

/// Printed closed form of the `W₂⁴` kernel on `x ≤ y`, as coefficients of
/// `x^0 … x^7`.
pub fn printed_w24_lower(y: f64) -> Vec<f64> {
    vec![
        1.0,
        y,
        y * y / 4.0,
        y.powi(3) / 36.0,
        y.powi(3) / 144.0,
        -y * y / 240.0,
        y / 720.0,
        -1.0 / 5040.0,
    ]
}

/// Printed `W₂⁴` coefficients on `x > y`.
pub fn printed_w24_upper(y: f64) -> Vec<f64> {
    vec![
        1.0 - y.powi(7) / 5040.0,
        y + y.powi(6) / 720.0,
        y * y / 4.0 - y.powi(5) / 240.0,
        y.powi(3) / 36.0 + y.powi(4) / 144.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDeviation {
    /// `"c"` for the piece `x ≤ y`, `"d"` for `x > y`.
    pub piece: String,
    /// 1-based; multiplies `x^(index-1)`.
    pub index: usize,
    pub derived: f64,
    pub printed: f64,
    pub deviation: f64,
}

impl CoefficientDeviation {
    pub fn relative(&self) -> f64 {
        let scale = self.derived.abs().max(self.printed.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.deviation / scale
        }
    }
}

/// Derived (direct condition solve) versus printed coefficients at `y`.
pub fn kernel_deviations(spec: &SpaceSpec, y: f64) -> Result<Vec<CoefficientDeviation>> {
    let (c, d) = kernel_system_oracle(spec, y)?;
    let (pc, pd) = if spec.order() == 5 {
        printed_w25_coefficients(y)
    } else {
        (printed_w24_lower(y), printed_w24_upper(y))
    };
    let mut out = Vec::with_capacity(c.len() + d.len());
    for (piece, derived, printed) in [("c", &c, &pc), ("d", &d, &pd)] {
        for (i, (a, b)) in derived.iter().zip(printed.iter()).enumerate() {
            out.push(CoefficientDeviation {
                piece: piece.to_string(),
                index: i + 1,
                derived: *a,
                printed: *b,
                deviation: (a - b).abs(),
            });
        }
    }
    Ok(out)
}

/// Relative deviation above which a printed coefficient is listed as a
/// suspected misprint.
pub const SUSPECT_RELATIVE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypoEntry {
    pub location: String,
    pub printed: String,
    pub adopted: String,
    pub evidence: String,
}

/// Misprints that are settled by algebra rather than by numbers.
pub fn known_typos() -> Vec<TypoEntry> {
    let e = |location: &str, printed: &str, adopted: &str, evidence: &str| TypoEntry {
        location: location.into(),
        printed: printed.into(),
        adopted: adopted.into(),
        evidence: evidence.into(),
    };
    vec![
        e(
            "linear operator L",
            "u'''' + Re g(x) - m² u'' + Re g'''(x) u",
            "u'''' + Re g(x) u''' - m² u'' + Re g'''(x) u",
            "substituting F = u + g leaves Re g u''' among the terms linear in u",
        ),
        e(
            "right-hand side M, fourth derivative of the lift",
            "e^(x-1) (x³ + 8x² + 8x - 2)",
            "e^(x-1) (x³ + 8x² + 8x - 8)",
            "product-rule expansion of g = e^(x-1) x (x-2)², checked by finite differences",
        ),
        e(
            "tenth derivative of the W₂⁵ kernel",
            "stated both as -δ(x-y) and as +δ(x-y)",
            "jump of -1 in the ninth derivative",
            "this sign reproduces u(y) for members of the space",
        ),
        e(
            "number of W₂⁵ kernel unknowns",
            "i = 1, 2, …, 12",
            "i = 1, 2, …, 10 per piece",
            "each piece has degree 9",
        ),
        e(
            "m = 1, Re = 10 results table, x = 0.8",
            "RK-4 0.901576, identical to the x = 0.7 row",
            "row flagged suspect and excluded from comparisons",
            "the profile is strictly increasing; the shooting solution differs by about 5e-2",
        ),
        e(
            "m = 1, Re = 10 comparison table, x = 0.8",
            "OHAM 0.956954 beside RK-4 and RKHSM 0.9015…",
            "row flagged suspect and excluded from comparisons",
            "the three columns cannot describe the same profile",
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypoReport {
    pub entries: Vec<TypoEntry>,
    /// Sample point of the coefficient comparison.
    pub y: f64,
    /// Printed `W₂⁵` coefficients off from the derived ones by more than
    /// [`SUSPECT_RELATIVE`].
    pub suspected_w25: Vec<CoefficientDeviation>,
    /// Largest deviation between the printed and derived `W₂⁴` kernels.
    pub w24_max_deviation: f64,
}

pub fn typo_report(y: f64) -> Result<TypoReport> {
    let suspected_w25 = kernel_deviations(&SpaceSpec::w25(), y)?
        .into_iter()
        .filter(|d| d.relative() > SUSPECT_RELATIVE)
        .collect();
    let w24_max_deviation = kernel_deviations(&SpaceSpec::w24(), y)?
        .iter()
        .map(|d| d.deviation)
        .fold(0.0, f64::max);
    Ok(TypoReport {
        entries: known_typos(),
        y,
        suspected_w25,
        w24_max_deviation,
    })
}
