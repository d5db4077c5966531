//! Machine-readable run reports.
//!
//! Serialization is canonical: keys sorted, floats written as `{:.16e}`
//! (17 significant digits), two-space indentation. The `timing` block is the
//! only part allowed to differ between runs of the same configuration.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA: &str = "spinc-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    /// Stable identity name, e.g. `spinorial-gauss`.
    pub identity: String,
    /// The identity in symbols.
    pub statement: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Reported-only records never affect the exit status.
    pub asserted: bool,
    pub pass: bool,
    pub samples: usize,
    /// Sample points, for replay.
    pub points: Vec<Vec<f64>>,
    pub detail: Value,
}

impl CheckRecord {
    pub fn new(identity: &str, statement: &str, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            identity: identity.into(),
            statement: statement.into(),
            residual,
            tolerance,
            asserted: true,
            // NaN residuals fail
            pass: residual <= tolerance,
            samples: 0,
            points: Vec::new(),
            detail: Value::Null,
        }
    }

    /// Reported-only: never fails, whatever the residual.
    pub fn reported(mut self) -> Self {
        self.asserted = false;
        self.pass = true;
        self
    }

    pub fn with_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.samples = points.len();
        self.points = points;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub asserted: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_residual: f64,
    /// Largest `residual / tolerance` over asserted checks.
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub config: Value,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    /// Command-specific payload (spectra, per-mode tables).
    pub data: Value,
    pub timing: Timing,
}

impl Report {
    pub fn new(config: Value, checks: Vec<CheckRecord>, data: Value, wall_seconds: f64) -> Self {
        let asserted: Vec<&CheckRecord> = checks.iter().filter(|c| c.asserted).collect();
        let passed = asserted.iter().filter(|c| c.pass).count();
        let summary = Summary {
            total: checks.len(),
            asserted: asserted.len(),
            passed,
            failed: asserted.len() - passed,
            worst_residual: asserted.iter().map(|c| c.residual).fold(0.0, f64::max),
            worst_ratio: asserted.iter().map(|c| c.residual / c.tolerance).fold(0.0, f64::max),
        };
        Report {
            schema: SCHEMA.into(),
            tool_version: TOOL_VERSION.into(),
            config,
            checks,
            summary,
            data,
            timing: Timing { wall_seconds },
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    /// Canonical text; `timing` is dropped when `with_timing` is false.
    pub fn canonical(&self, with_timing: bool) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if !with_timing {
            if let Value::Object(m) = &mut v {
                m.remove("timing");
            }
        }
        Ok(canonical_json(&v))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = self.canonical(true)?;
        s.push('\n');
        crate::lattice::write_atomic(path, s.as_bytes())
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// Pretty JSON with sorted keys and fixed float formatting.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            // numeric rows stay on one line
            if a.iter().all(|x| x.is_number()) {
                out.push('[');
                for (k, x) in a.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                if k + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &m[*key], depth + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push('}');
        }
    }
}
