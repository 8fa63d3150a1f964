//! Report assembly. Floats are written with 17 significant digits so every
//! value parses back to the same `f64`.

use serde_json::{Map, Number, Value};

use crate::io::Fingerprint;

/// `x` in scientific notation with 17 significant digits and a signed
/// exponent, the form JSON numbers are printed in.
pub fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

/// JSON number carrying exactly the text of [`fmt_f64`]; non-finite values
/// become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let n: Number = serde_json::from_str(&fmt_f64(x)).expect("formatted float is valid JSON");
    Value::Number(n)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn fingerprint(f: &Fingerprint) -> Value {
    let mut m = Map::new();
    m.insert("path".into(), f.path.clone().into());
    m.insert("rows".into(), f.rows.into());
    m.insert("sha256".into(), f.sha256.clone().into());
    Value::Object(m)
}

/// A run report: what was run, on which inputs, and what came out.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: &'static str,
    pub arguments: Map<String, Value>,
    pub inputs: Map<String, Value>,
    pub result: Value,
    /// Tabular view of the result for `--format csv`.
    pub table: CsvTable,
    pub wall_time: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert("command".into(), self.command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("arguments".into(), Value::Object(self.arguments.clone()));
        m.insert("inputs".into(), Value::Object(self.inputs.clone()));
        m.insert("result".into(), self.result.clone());
        if let Some(t) = self.wall_time {
            m.insert("wall_time_seconds".into(), num(t));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("serializable report");
        s.push('\n');
        s
    }
}

/// A header and string cells, rendered as RFC 4180 CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 cells")
    }
}

pub fn cell(x: f64) -> String {
    fmt_f64(x)
}

pub fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}
