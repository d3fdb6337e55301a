//! Deterministic CSV and JSON rendering.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Version of the CSV layouts, written in the `schema` column.
pub const SCHEMA_VERSION: u32 = 1;

/// Number of significant digits of every printed float.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Float with twelve significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
    } else {
        v.to_string()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Rounds a float to twelve significant digits.
pub fn round_f64(v: f64) -> f64 {
    if v.is_finite() {
        fmt_f64(v).parse().unwrap_or(v)
    } else {
        v
    }
}

fn round_value(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|v| serde_json::Number::from_f64(round_f64(v))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with all floats rounded to twelve significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Other(e.into()))?;
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Other(e.into()))?;
    text.push('\n');
    Ok(text)
}

/// CSV with a header row; every record is prefixed by the schema version.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut full = vec!["schema"];
    full.extend_from_slice(header);
    w.write_record(&full).map_err(|e| CliError::Other(e.into()))?;
    let schema = SCHEMA_VERSION.to_string();
    for row in rows {
        let mut rec = vec![schema.as_str()];
        rec.extend(row.iter().map(String::as_str));
        w.write_record(&rec).map_err(|e| CliError::Other(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Other(anyhow::anyhow!("{e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Other(e.into()))
}

/// Writes to `out`, or to standard output when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Other(anyhow::anyhow!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Other(e.into()))
        }
    }
}
