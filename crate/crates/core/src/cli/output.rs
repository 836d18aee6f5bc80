//! Rendering of job reports as table, CSV, JSON or SVG text.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use super::{Format, JobSpec};
use crate::error::{Error, Result};
use crate::svg::{render_region_svg, Plot};

/// One CSV line: a grid point (θ in degrees, α, boundary index, ...).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub param: String,
    pub objective: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub method: String,
    pub std_error: f64,
}

/// A computed value set against an expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: String,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: format!("{reference} ± {tol}"),
            pass: (value - reference).abs() <= tol,
        }
    }

    pub fn sign(name: impl Into<String>, value: f64, positive: bool) -> Self {
        Self {
            name: name.into(),
            value,
            expected: if positive { "> 0" } else { "< 0" }.into(),
            pass: if positive { value > 0.0 } else { value < 0.0 },
        }
    }

    pub fn flag(name: impl Into<String>, value: bool, expected: bool) -> Self {
        Self {
            name: name.into(),
            value: if value { 1.0 } else { 0.0 },
            expected: expected.to_string(),
            pass: value == expected,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub job: JobSpec,
    pub title: String,
    /// Ordered key/value pairs shown by every format.
    pub summary: Vec<(String, Value)>,
    pub checks: Vec<Check>,
    pub rows: Vec<Row>,
    pub plot: Option<Plot>,
}

impl Report {
    pub fn new(job: &JobSpec, title: impl Into<String>) -> Self {
        Self {
            job: job.clone(),
            title: title.into(),
            summary: Vec::new(),
            checks: Vec::new(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("summary values serialize");
        self.summary.push((key.into(), v));
    }

    pub fn job_json(&self) -> String {
        serde_json::to_string(&self.job).expect("job spec serializes")
    }
}

/// Nine significant digits, plain decimal notation for moderate magnitudes.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if (-5..12).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map(sig9).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(value_text).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

fn render_table(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", r.title);
    let _ = writeln!(s, "# job: {}", r.job_json());
    let _ = writeln!(s, "# seed: {}", r.job.seed);
    let width = r.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &r.summary {
        let _ = writeln!(s, "{k:<width$}  {}", value_text(v));
    }
    if !r.checks.is_empty() {
        let _ = writeln!(s);
        let w = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &r.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{verdict}  {:<w$}  {}  (expected {})",
                c.name,
                sig9(c.value),
                c.expected
            );
        }
    }
    if !r.rows.is_empty() {
        let _ = writeln!(
            s,
            "\n{} grid rows (use --format csv to list them)",
            r.rows.len()
        );
    }
    s
}

fn render_csv(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# job: {}", r.job_json());
    let _ = writeln!(s, "# seed: {}", r.job.seed);
    for (k, v) in &r.summary {
        let _ = writeln!(s, "# {k}: {}", value_text(v));
    }
    for c in &r.checks {
        let _ = writeln!(
            s,
            "# check {}: {} {} (expected {})",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            sig9(c.value),
            c.expected
        );
    }
    let _ = writeln!(s, "param,objective,R1,R2,method,std_error");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&row.param),
            sig9(row.objective),
            opt(row.r1),
            opt(row.r2),
            csv_field(&row.method),
            sig9(row.std_error)
        );
    }
    s
}

fn render_json(r: &Report) -> Result<String> {
    let summary: serde_json::Map<String, Value> = r.summary.iter().cloned().collect();
    let doc = serde_json::json!({
        "title": r.title,
        "job": r.job,
        "seed": r.job.seed,
        "summary": summary,
        "checks": r.checks,
        "rows": r.rows,
    });
    let mut text =
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn render(r: &Report) -> Result<String> {
    match r.job.output.format {
        Format::Table => Ok(render_table(r)),
        Format::Csv => Ok(render_csv(r)),
        Format::Json => render_json(r),
        Format::Svg => {
            let mut plot = r.plot.clone().unwrap_or_default();
            if plot.title.is_empty() {
                plot.title = r.title.clone();
            }
            plot.metadata = r.job_json();
            render_region_svg(&plot)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(3.1073456789123), "3.10734568");
        assert_eq!(sig9(12.102), "12.1020000");
        assert_eq!(sig9(9.9999999995), "10.0000000");
        assert_eq!(sig9(0.000123456789123), "0.000123456789");
        assert_eq!(sig9(1.5e-9), "1.50000000e-9");
        assert_eq!(sig9(-2.0), "-2.00000000");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
