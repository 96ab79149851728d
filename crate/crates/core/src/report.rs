//! Machine-readable run reports.
//!
//! A report is a command name, the fully resolved configuration, a result
//! object and optional per-row records (sessions, sweep points, curve
//! samples). Floats are rounded to 10 significant digits and object keys are
//! sorted, so identical runs give byte-identical output.
//!
//! JSON: a single object `{"command", "config", "result"}` on the first line,
//! followed by one line per row.
//!
//! CSV: `#`-prefixed `key=value` header lines carrying the command, config
//! and (when rows are present) the result, then a table. The table has one
//! line per row, or a single line holding the result when there are no rows.
//! Nested keys are flattened with dots, array elements by index.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub rows: Vec<Value>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map(round_floats).map_err(|e| Error::invalid(format!("serialization failed: {e}")))
}

impl Report {
    pub fn new<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<Self> {
        Ok(Report { command: command.to_string(), config: to_value(config)?, result: to_value(result)?, rows: Vec::new() })
    }

    pub fn push_row<T: Serialize>(&mut self, row: &T) -> Result<()> {
        self.rows.push(to_value(row)?);
        Ok(())
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(self.to_json()),
            Format::Csv => self.to_csv(),
        }
    }

    fn header(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("config".into(), self.config.clone());
        m.insert("result".into(), self.result.clone());
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        let mut out = self.header().to_string();
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let mut meta = BTreeMap::new();
        meta.insert("command".to_string(), self.command.clone());
        flatten_into("config", &self.config, &mut meta);
        let table: Vec<BTreeMap<String, String>> = if self.rows.is_empty() {
            vec![flatten(&self.result)]
        } else {
            flatten_into("result", &self.result, &mut meta);
            self.rows.iter().map(flatten).collect()
        };
        for (k, v) in &meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut columns: Vec<&String> = table.iter().flat_map(|r| r.keys()).collect();
        columns.sort();
        columns.dedup();
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        w.write_record(&columns).map_err(csv_err)?;
        for row in &table {
            w.write_record(columns.iter().map(|c| row.get(*c).map(String::as_str).unwrap_or("")))
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    /// Writes to `path`, or stdout when `None`.
    pub fn emit(&self, format: Format, path: Option<&std::path::Path>) -> Result<()> {
        let text = self.render(format)?;
        match path {
            Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|source| Error::Io { path: "<stdout>".into(), source })
            }
        }
    }
}

/// Rounds every non-integer number to 10 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.9e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flatten_into(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(o) => o.iter().for_each(|(k, v)| flatten_into(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten_into(&key(&i.to_string()), v, out)),
        other => {
            out.insert(prefix.to_string(), scalar(other));
        }
    }
}

/// Dotted-key view of a JSON value.
pub fn flatten(v: &Value) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    flatten_into("", v, &mut out);
    out
}
