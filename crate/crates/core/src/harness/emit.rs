//! Deterministic JSON and CSV rendering of reports.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Number, Value};

use super::{ExperimentReport, Format};
use crate::error::{invalid, Error, Result};

pub const CSV_HEADER: &str = "k,a_k,upper,lower,ratio,flags";

/// `printf("%.17g")`: 17 significant digits, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.prec$}", prec = (16 - exp) as usize))
    }
}

fn rewrite_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("finite float");
            *n = Number::from_str(&format_g17(x)).expect("valid JSON number");
        }
        Value::Array(items) => items.iter_mut().for_each(rewrite_floats),
        Value::Object(map) => map.values_mut().for_each(rewrite_floats),
        _ => {}
    }
}

pub fn render_json(report: &ExperimentReport) -> Result<String> {
    let mut value = serde_json::to_value(report).map_err(|e| invalid(format!("report serialization: {e}")))?;
    rewrite_floats(&mut value);
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| invalid(format!("report serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn render_csv(report: &ExperimentReport) -> String {
    let cell = |x: Option<f64>| x.map(format_g17).unwrap_or_default();
    let mut out = String::with_capacity(64 * (report.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let flags: Vec<String> = r
            .flags
            .iter()
            .map(|(name, ok)| format!("{name}:{}", if *ok { "pass" } else { "fail" }))
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            cell(r.a_k),
            cell(r.upper),
            cell(r.lower),
            cell(r.ratio),
            flags.join(";")
        );
    }
    out
}

/// Writes the report to `path`, or to standard output when `path` is `None`.
pub fn emit_report(report: &ExperimentReport, format: Format, path: Option<&Path>) -> Result<()> {
    let text = match format {
        Format::Json => render_json(report)?,
        Format::Csv => render_csv(report),
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}
