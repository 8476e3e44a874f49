//! Output artifacts: one JSON document or one CSV table per run.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! that equal results give byte-identical files. Every artifact carries the
//! resolved configuration and the seed.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::{fmt_f64, OutputFormat};

/// A run result: scalar summary values plus a table of rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub summary: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Artifact {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Artifact {
            command: command.to_string(),
            seed,
            config,
            summary: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn set_columns(&mut self, columns: &[&str]) {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, format: OutputFormat, out: W) -> io::Result<()> {
        match format {
            OutputFormat::Json => write_json(self, out),
            OutputFormat::Csv => write_csv(self, out),
        }
    }

    pub fn render(&self, format: OutputFormat) -> io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(buf)
    }
}

/// Pretty JSON with fixed-width float formatting.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Single-line JSON with fixed-width float formatting.
struct CompactFixed;

impl Formatter for CompactFixed {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloat(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (None, Some(i), _) => i.to_string(),
            (_, _, Some(f)) => fmt_f64(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => serde_json::to_string(other).unwrap_or_default(),
    }
}

/// `# key = value` header lines (command, seed, config, summary), then the table.
pub fn write_csv<W: Write>(a: &Artifact, mut out: W) -> io::Result<()> {
    writeln!(out, "# command = {}", a.command)?;
    writeln!(out, "# seed = {}", a.seed)?;
    for (k, v) in &a.config {
        writeln!(out, "# config.{k} = {v}")?;
    }
    for (k, v) in &a.summary {
        let text = match v {
            Value::Array(_) | Value::Object(_) => {
                let mut buf = Vec::new();
                v.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, CompactFixed))
                    .map_err(io::Error::other)?;
                String::from_utf8(buf).map_err(io::Error::other)?
            }
            _ => cell(v),
        };
        writeln!(out, "# summary.{k} = {text}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&a.columns)?;
    for row in &a.rows {
        w.write_record(row.iter().map(cell))?;
    }
    w.flush()
}
