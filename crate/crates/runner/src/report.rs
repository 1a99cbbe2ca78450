//! Report model and writers: a summary document, line-delimited records and
//! a CSV of every margin row.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Serialize, Serializer};
use serde_json::ser::Formatter;
use stab_core::hyers::{BoundReport, MarginRow, MARGIN_TOL};

use crate::config::{Experiment, ExperimentConfig, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

/// A float that serializes non-finite values as `"inf"`, `"-inf"` or `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// A hypothesis; failing it makes the conclusions not applicable.
    Premise,
    Conclusion,
    /// A step inside a proof, checked on its own.
    Intermediate,
    /// A property of the machinery itself, asserted unconditionally.
    Invariant,
    /// A construction that must be caught; PASS means it was.
    NegativeControl,
}

impl Role {
    fn asserted_without_premises(self) -> bool {
        matches!(self, Role::Invariant | Role::NegativeControl | Role::Premise)
    }
}

/// One numbered inequality `lhs ≤ rhs`, possibly aggregated over a table of
/// rows; `lhs`, `rhs` and `margin` then come from the row with the smallest margin.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub name: String,
    pub role: Role,
    pub surrogate: bool,
    pub lhs: Num,
    pub rhs: Num,
    pub margin: Num,
    pub rows: usize,
    pub violations: usize,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    pub table: Vec<MarginRow>,
}

impl Check {
    /// Single inequality; passes when `lhs ≤ rhs`.
    pub fn le(name: &str, role: Role, lhs: f64, rhs: f64) -> Self {
        let pass = lhs <= rhs;
        Self::from_parts(name, role, MarginRow::new(lhs, rhs), 1, usize::from(!pass), pass, Vec::new())
    }

    /// A table of margin rows; passes when every margin is `≥ −MARGIN_TOL`.
    pub fn bound(name: &str, role: Role, report: &BoundReport) -> Self {
        Self::table(name, role, report.rows.clone(), MARGIN_TOL)
    }

    /// A table of rows; passes when every margin is `≥ −slack`.
    pub fn table(name: &str, role: Role, rows: Vec<MarginRow>, slack: f64) -> Self {
        let worst = rows
            .iter()
            .copied()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .unwrap_or(MarginRow::new(0.0, 0.0));
        let violations = rows.iter().filter(|r| !(r.margin >= -slack)).count();
        Self::from_parts(name, role, worst, rows.len(), violations, violations == 0, rows)
    }

    fn from_parts(
        name: &str,
        role: Role,
        row: MarginRow,
        rows: usize,
        violations: usize,
        pass: bool,
        table: Vec<MarginRow>,
    ) -> Self {
        Self {
            id: String::new(),
            name: name.to_string(),
            role,
            surrogate: false,
            lhs: Num(row.lhs),
            rhs: Num(row.rhs),
            margin: Num(row.margin),
            rows,
            violations,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            note: None,
            table,
        }
    }

    pub fn surrogate(mut self) -> Self {
        self.surrogate = true;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn not_applicable(mut self, why: impl Into<String>) -> Self {
        self.verdict = Verdict::NotApplicable;
        self.note = Some(why.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// One line of the record stream.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub pipeline: &'static str,
    pub kind: &'static str,
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub fitted: BTreeMap<String, Num>,
    pub checks: Vec<Check>,
    /// Premises that failed, by check name.
    pub broken_hypotheses: Vec<String>,
    pub verdict: Verdict,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub records: Vec<Record>,
}

impl StabilityReport {
    pub fn new(experiment: Experiment, config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            seed: config.sampling.seed,
            config: config.clone(),
            fitted: BTreeMap::new(),
            checks: Vec::new(),
            broken_hypotheses: Vec::new(),
            verdict: Verdict::Pass,
            wall_clock_seconds: 0.0,
            records: Vec::new(),
        }
    }

    pub fn fit(&mut self, name: &str, value: f64) {
        self.fitted.insert(name.to_string(), Num(value));
    }

    pub fn push(&mut self, mut check: Check) {
        check.id = format!("C{:02}", self.checks.len() + 1);
        self.checks.push(check);
    }

    pub fn record(&mut self, kind: &'static str, index: usize, step: Option<u32>, data: impl Serialize) {
        let data = serde_json::to_value(data).expect("record data serializes");
        self.records.push(Record {
            pipeline: self.experiment.name(),
            kind,
            index,
            step,
            data,
        });
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Marks conclusions and intermediate steps as not applicable when a
    /// premise failed, then settles the overall verdict.
    pub fn finalize(&mut self) {
        self.broken_hypotheses = self
            .checks
            .iter()
            .filter(|c| c.role == Role::Premise && c.verdict == Verdict::Fail)
            .map(|c| c.name.clone())
            .collect();
        let premises_hold = self.broken_hypotheses.is_empty();
        if !premises_hold {
            for c in &mut self.checks {
                if !c.role.asserted_without_premises() && c.verdict != Verdict::NotApplicable {
                    let was = c.verdict;
                    c.verdict = Verdict::NotApplicable;
                    c.note = Some(format!("premises unmet; measured {was}, not asserted"));
                }
            }
        }
        let failed = self
            .checks
            .iter()
            .any(|c| c.role != Role::Premise && c.verdict == Verdict::Fail);
        self.verdict = if failed {
            Verdict::Fail
        } else if !premises_hold {
            Verdict::NotApplicable
        } else {
            Verdict::Pass
        };
    }

    pub fn write_summary(&self, w: impl Write) -> io::Result<()> {
        let mut w = w;
        write_json(&mut w, self)?;
        w.write_all(b"\n")
    }

    pub fn write_records(&self, mut w: impl Write) -> io::Result<()> {
        for r in &self.records {
            write_json(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["check", "name", "row", "lhs", "rhs", "margin"])?;
        for c in &self.checks {
            let single = [MarginRow {
                lhs: c.lhs.0,
                rhs: c.rhs.0,
                margin: c.margin.0,
            }];
            let rows: &[MarginRow] = if c.table.is_empty() { &single } else { &c.table };
            for (i, r) in rows.iter().enumerate() {
                out.write_record([
                    c.id.clone(),
                    c.name.clone(),
                    i.to_string(),
                    fmt17(r.lhs),
                    fmt17(r.rhs),
                    fmt17(r.margin),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Summary text without the wall-clock field, for determinism checks.
    pub fn canonical_summary(&self) -> String {
        let mut buf = Vec::new();
        self.write_summary(&mut buf).expect("in-memory write");
        let mut v: serde_json::Value = serde_json::from_slice(&buf).expect("own output parses");
        v.as_object_mut().expect("object").remove("wall_clock_seconds");
        v.to_string()
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(w, SeventeenDigits);
    value.serialize(&mut ser).map_err(io::Error::other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(f64::INFINITY), "inf");
        let mut buf = Vec::new();
        write_json(&mut buf, &(Num(1.0), Num(f64::INFINITY), Num(f64::NEG_INFINITY))).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), r#"[1.0000000000000000e0,"inf","-inf"]"#);
        let back: f64 = serde_json::from_str(&fmt17(std::f64::consts::PI)).unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn table_check_picks_worst_row() {
        let rows = vec![MarginRow::new(1.0, 3.0), MarginRow::new(2.0, 2.5), MarginRow::new(0.0, 9.0)];
        let c = Check::table("t", Role::Conclusion, rows, 0.0);
        assert_eq!(c.lhs, Num(2.0));
        assert_eq!(c.margin, Num(0.5));
        assert!(c.passed());
        let c = Check::table("t", Role::Conclusion, vec![MarginRow::new(1.0 + 1e-12, 1.0)], 1e-9);
        assert!(c.passed());
        let c = Check::le("nan", Role::Invariant, f64::NAN, 1.0);
        assert!(!c.passed());
    }
}
