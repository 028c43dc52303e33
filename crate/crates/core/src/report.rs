//! Bound reports and their CSV form.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::budget::ErrorBudget;
use crate::error::{Error, Result};

/// Every bound the crate can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundId {
    #[serde(rename = "th1_general")]
    Th1General,
    #[serde(rename = "th1_simple")]
    Th1Simple,
    #[serde(rename = "cor1")]
    Cor1,
    #[serde(rename = "mult_1_7")]
    Mult17,
    #[serde(rename = "cor2")]
    Cor2,
    #[serde(rename = "esseen_1_11")]
    Esseen111,
    #[serde(rename = "sharpened_1_13")]
    Sharpened113,
    #[serde(rename = "cf_1_15")]
    Cf115,
    #[serde(rename = "cf_1_16")]
    Cf116,
    #[serde(rename = "lemma1")]
    Lemma1,
}

impl BoundId {
    pub const ALL: [BoundId; 10] = [
        BoundId::Th1General,
        BoundId::Th1Simple,
        BoundId::Cor1,
        BoundId::Mult17,
        BoundId::Cor2,
        BoundId::Esseen111,
        BoundId::Sharpened113,
        BoundId::Cf115,
        BoundId::Cf116,
        BoundId::Lemma1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::Th1General => "th1_general",
            BoundId::Th1Simple => "th1_simple",
            BoundId::Cor1 => "cor1",
            BoundId::Mult17 => "mult_1_7",
            BoundId::Cor2 => "cor2",
            BoundId::Esseen111 => "esseen_1_11",
            BoundId::Sharpened113 => "sharpened_1_13",
            BoundId::Cf115 => "cf_1_15",
            BoundId::Cf116 => "cf_1_16",
            BoundId::Lemma1 => "lemma1",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown bound `{s}`")))
    }
}

/// One evaluation `lhs ≤ c · rhs_unit` of a bound with its constant set to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_id: BoundId,
    /// Exact concentration value on the left-hand side.
    pub lhs: f64,
    pub rhs_unit: f64,
    /// `lhs / rhs_unit`; infinite when `rhs_unit` is zero (serialized as `null`).
    pub implied_c: f64,
    /// False when the scenario violates the bound's hypotheses; the numbers
    /// are still reported but the bound makes no claim there.
    pub hypothesis_ok: bool,
    pub params: BTreeMap<String, f64>,
    pub budgets: ErrorBudget,
}

impl BoundReport {
    pub(crate) fn new(bound_id: BoundId, lhs: f64, rhs_unit: f64) -> Self {
        BoundReport {
            bound_id,
            lhs,
            rhs_unit,
            implied_c: implied_constant(lhs, rhs_unit),
            hypothesis_ok: true,
            params: BTreeMap::new(),
            budgets: ErrorBudget::ZERO,
        }
    }

    pub(crate) fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut head: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        head.extend(self.params.keys().cloned());
        head
    }

    pub fn csv_record(&self) -> Vec<String> {
        let mut row = vec![
            self.bound_id.to_string(),
            fmt_float(self.lhs),
            fmt_float(self.rhs_unit),
            fmt_float(self.implied_c),
            self.hypothesis_ok.to_string(),
            fmt_float(self.budgets.pruned_mass),
            fmt_float(self.budgets.fft_residual),
        ];
        row.extend(self.params.values().map(|&v| fmt_float(v)));
        row
    }
}

pub fn implied_constant(lhs: f64, rhs_unit: f64) -> f64 {
    if rhs_unit == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs_unit
    }
}

const FIXED_COLUMNS: [&str; 7] = [
    "bound_id",
    "lhs",
    "rhs_unit",
    "implied_c",
    "hypothesis_ok",
    "pruned_mass",
    "fft_residual",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Writes reports as CSV with a header taken from the first report. All
/// reports must carry the same parameter keys.
pub fn write_reports_csv<W: io::Write>(out: W, reports: &[BoundReport]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    if let Some(first) = reports.first() {
        writer.write_record(first.csv_header()).map_err(csv_err)?;
    }
    for r in reports {
        writer.write_record(r.csv_record()).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Reads back the rows written by [`write_reports_csv`]. Lines starting
/// with `#` (the sweep footer) are skipped.
pub fn read_reports_csv<R: io::Read>(input: R) -> Result<Vec<BoundReport>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let header = reader.headers().map_err(csv_err)?.clone();
    let expected = FIXED_COLUMNS.iter().copied();
    if !header.iter().zip(expected).all(|(a, b)| a == b) || header.len() < FIXED_COLUMNS.len() {
        return Err(Error::Parse(format!("unexpected CSV header: {header:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("column `{}`: bad number `{}`", &header[i], &record[i])))
        };
        let bound_id: BoundId = record[0].parse()?;
        let hypothesis_ok = record[4]
            .parse::<bool>()
            .map_err(|_| Error::Parse(format!("bad hypothesis flag `{}`", &record[4])))?;
        let mut params = BTreeMap::new();
        for i in FIXED_COLUMNS.len()..header.len() {
            params.insert(header[i].to_string(), num(i)?);
        }
        out.push(BoundReport {
            bound_id,
            lhs: num(1)?,
            rhs_unit: num(2)?,
            implied_c: num(3)?,
            hypothesis_ok,
            params,
            budgets: ErrorBudget {
                pruned_mass: num(5)?,
                fft_residual: num(6)?,
            },
        });
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}
