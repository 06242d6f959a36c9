//! Verdicts, the run manifest and CSV helpers.

use std::fs;
use std::path::Path;

use ruelle_core::ExtendedReal;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One verdict: a measured value against its tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    #[serde(rename = "check")]
    pub name: String,
    #[serde(rename = "pass")]
    pub passed: bool,
    #[serde(rename = "residual")]
    pub measured: f64,
    pub bound: Bound,
    pub tolerance: f64,
    /// `"negative"` for expected-failure controls, which never fail a run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Value>,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Bound::AtMost, tolerance, measured <= tolerance)
    }

    pub fn at_least(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Bound::AtLeast, tolerance, measured >= tolerance)
    }

    fn new(name: &str, measured: f64, bound: Bound, tolerance: f64, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            measured,
            bound,
            tolerance,
            control: None,
            n_used: None,
            note: None,
            rows: Vec::new(),
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n_used = Some(n);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_rows<T: Serialize>(mut self, rows: impl IntoIterator<Item = T>) -> Self {
        self.rows = rows.into_iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect();
        self
    }

    pub fn negative_control(mut self) -> Self {
        self.control = Some("negative");
        self
    }

    /// Whether this verdict can fail the run.
    pub fn counts(&self) -> bool {
        self.control.is_none()
    }

    pub fn summary(&self) -> String {
        let verdict = match (self.control, self.passed) {
            (Some(_), true) => "CTRL",
            (Some(_), false) => "CTRL?",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        let op = match self.bound {
            Bound::AtMost => "≤",
            Bound::AtLeast => "≥",
        };
        let mut line = format!("{verdict} {}: {:.3e} {op} {:e}", self.name, self.measured, self.tolerance);
        if let Some(n) = self.n_used {
            line.push_str(&format!(" (n ≤ {n})"));
        }
        if let Some(note) = &self.note {
            line.push_str(&format!(" [{note}]"));
        }
        line
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub budget: u64,
    pub started_at: String,
    pub finished_at: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(name.to_string())
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn ext(x: ExtendedReal) -> String {
    match x {
        ExtendedReal::Finite(v) => num(v),
        ExtendedReal::PlusInfinity => "inf".into(),
        ExtendedReal::MinusInfinity => "-inf".into(),
    }
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(name.to_string())
}
