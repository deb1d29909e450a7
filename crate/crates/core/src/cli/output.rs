//! Tabular output as CSV or JSON lines.

use std::fmt::Write as _;

use clap::ValueEnum;

use crate::kv::fmt_number;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Missing, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(x) if x.is_finite() => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Num(x) => Value::String(fmt_number(*x)),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Ordered `key = value` pairs describing the effective configuration.
pub type Echo = Vec<(String, String)>;

fn json_object(pairs: impl IntoIterator<Item = (String, serde_json::Value)>) -> String {
    let body: Vec<String> = pairs
        .into_iter()
        .map(|(k, v)| format!("{}:{}", serde_json::Value::String(k), v))
        .collect();
    format!("{{{}}}", body.join(","))
}

/// Renders `table` preceded by the configuration echo: `# key = value` lines
/// in CSV, a leading `config` record in JSON lines.
pub fn render(table: &Table, format: Format, echo: &Echo) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            let _ = writeln!(out, "# schema_version = {SCHEMA_VERSION}");
            for (k, v) in echo {
                let _ = writeln!(out, "# {k} = {v}");
            }
            let _ = writeln!(out, "{}", table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        Format::Jsonl => {
            let head = [
                ("record".to_string(), "config".into()),
                ("schema_version".to_string(), SCHEMA_VERSION.into()),
            ];
            let config = echo
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())));
            let _ = writeln!(out, "{}", json_object(head.into_iter().chain(config)));
            for row in &table.rows {
                let head = [
                    ("record".to_string(), "row".into()),
                    ("schema_version".to_string(), SCHEMA_VERSION.into()),
                ];
                let cells = table.columns.iter().cloned().zip(row.iter().map(Cell::json));
                let _ = writeln!(out, "{}", json_object(head.into_iter().chain(cells)));
            }
        }
    }
    out
}
