//! CSV and JSON writers with a provenance header.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}; expected csv or json")),
        }
    }
}

/// A result table plus the metadata needed to reproduce it.
#[derive(Debug, Clone)]
pub struct Table {
    pub metadata: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Fixed-width scientific notation, 13 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        format!("{x}").to_lowercase()
    }
}

impl Table {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// `# key: value` metadata lines, then the header and rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Value::Object(map) = &self.metadata {
            for (k, v) in map {
                out.push_str(&format!("# {k}: {v}\n"));
            }
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Rows become objects keyed by the header; numeric cells are parsed
    /// back to numbers and non-finite ones become null.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.header
                        .iter()
                        .zip(r)
                        .map(|(h, c)| (h.clone(), cell_value(c)))
                        .collect(),
                )
            })
            .collect();
        let doc = serde_json::json!({ "metadata": self.metadata, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("json serializes");
        s.push('\n');
        s
    }
}

fn cell_value(c: &str) -> Value {
    if let Ok(i) = c.parse::<i64>() {
        return Value::from(i);
    }
    match c.parse::<f64>() {
        Ok(x) if x.is_finite() => Value::from(x),
        Ok(_) => Value::Null,
        Err(_) => Value::String(c.to_string()),
    }
}

/// Writes to `path`, or stdout when none is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
