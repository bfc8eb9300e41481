//! Report model and the CSV / JSON writers.
//!
//! Output is a pure function of the report contents: fixed column order,
//! fixed float formatting, no timestamps, no host or thread information.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{OutputFormat, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => float_json(*x),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Null, Into::into)
    }
}

/// 17 significant digits in scientific notation; `inf`/`nan` spelled out.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn float_json(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(format_float(x))
    }
}

/// Overall verdict of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Expected mismatch under a documented diagnostic setting.
    Diagnostic,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Diagnostic => "diagnostic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Named numeric deviations, kept in insertion order.
    pub deviations: Vec<(String, f64)>,
    pub status: Status,
}

impl Report {
    pub fn new(config: RunConfig, columns: Vec<&'static str>) -> Self {
        Report {
            config,
            columns,
            rows: Vec::new(),
            deviations: Vec::new(),
            status: Status::Pass,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn deviation(&mut self, name: impl Into<String>, value: f64) {
        self.deviations.push((name.into(), value));
    }

    /// Downgrade the status; `Fail` wins over `Diagnostic`.
    pub fn mark(&mut self, status: Status) {
        self.status = match (self.status, status) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Diagnostic, _) | (_, Status::Diagnostic) => Status::Diagnostic,
            _ => Status::Pass,
        };
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write(&self, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => self.write_json(out),
        }
    }

    pub fn to_string(&self, format: OutputFormat) -> String {
        let mut buf = Vec::new();
        self.write(format, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("reports are UTF-8")
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# diagdesign {VERSION}")?;
        writeln!(out, "# command: {}", self.config.command.as_str())?;
        let echo = self.config.echo();
        let pairs: Vec<String> = echo.iter().map(|(k, v)| format!("{k}={}", echo_value(v))).collect();
        writeln!(out, "# config: {}", pairs.join(" "))?;
        for (name, value) in &self.deviations {
            writeln!(out, "# deviation: {name}={}", format_float(*value))?;
        }
        writeln!(out, "# status: {}", self.status.as_str())?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let results: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, cell) in self.columns.iter().zip(row) {
                    obj.insert((*c).to_string(), cell.json());
                }
                Value::Object(obj)
            })
            .collect();
        let mut deviations = Map::new();
        for (name, value) in &self.deviations {
            deviations.insert(name.clone(), float_json(*value));
        }
        let mut top = Map::new();
        top.insert("version".into(), Value::from(VERSION));
        top.insert("command".into(), Value::from(self.config.command.as_str()));
        top.insert("config".into(), Value::Object(self.config.echo()));
        top.insert("status".into(), Value::from(self.status.as_str()));
        top.insert("deviations".into(), Value::Object(deviations));
        top.insert("results".into(), Value::Array(results));
        serde_json::to_writer_pretty(&mut *out, &Value::Object(top))?;
        writeln!(out)
    }
}

fn echo_value(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format_float(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CommandKind, RunConfig};

    fn report() -> Report {
        let mut r = Report::new(RunConfig::new(CommandKind::Bracket), vec!["ell", "value", "note"]);
        r.push_row(vec![1u32.into(), 0.35.into(), "a,b".into()]);
        r.push_row(vec![2u32.into(), Cell::Null, Cell::Null]);
        r.deviation("chain", 0.0);
        r
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.35), "3.4999999999999998e-1");
        assert_eq!(format_float(2.0), "2.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let s = report().to_string(OutputFormat::Csv);
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# diagdesign "));
        assert_eq!(lines[1], "# command: bracket");
        assert!(lines.contains(&"# deviation: chain=0.0000000000000000e0"));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], "ell,value,note");
        assert_eq!(lines[header + 1], "1,3.4999999999999998e-1,\"a,b\"");
        assert_eq!(lines[header + 2], "2,,");
    }

    #[test]
    fn json_layout() {
        let v: Value = serde_json::from_str(&report().to_string(OutputFormat::Json)).unwrap();
        assert_eq!(v["results"][0]["value"], Value::from(0.35));
        assert_eq!(v["results"][1]["value"], Value::Null);
        assert_eq!(v["deviations"]["chain"], Value::from(0.0));
        assert_eq!(v["status"], "pass");
        assert_eq!(v["version"], VERSION);
    }

    #[test]
    fn status_merging() {
        let mut r = report();
        r.mark(Status::Diagnostic);
        assert_eq!(r.status, Status::Diagnostic);
        r.mark(Status::Pass);
        assert_eq!(r.status, Status::Diagnostic);
        r.mark(Status::Fail);
        r.mark(Status::Diagnostic);
        assert_eq!(r.status, Status::Fail);
    }
}
