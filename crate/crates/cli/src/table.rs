//! Tabular output. CSV numbers carry 17 significant digits; JSON numbers use
//! the shortest representation that parses back to the same f64.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::I(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

fn csv_text(c: &Cell) -> String {
    match c {
        Cell::F(v) if *v == 0.0 => format!("{:.16e}", 0.0),
        Cell::F(v) if v.is_finite() => format!("{v:.16e}"),
        Cell::F(v) => format!("{v}"),
        Cell::I(v) => v.to_string(),
        Cell::S(s) => s.clone(),
        Cell::B(b) => b.to_string(),
        Cell::Null => String::new(),
    }
}

fn json_value(c: &Cell) -> Value {
    match c {
        Cell::F(v) => serde_json::Number::from_f64(*v)
            .map_or_else(|| Value::String(v.to_string()), Value::Number),
        Cell::I(v) => Value::from(*v),
        Cell::S(s) => Value::String(s.clone()),
        Cell::B(b) => Value::Bool(*b),
        Cell::Null => Value::Null,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (k, c) in self.columns.iter().zip(r) {
                        m.insert((*k).to_string(), json_value(c));
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(csv_text))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// What a command produces: a table, optionally with a JSON document that
/// replaces the table in JSON mode.
pub struct Report {
    pub table: Table,
    pub json: Option<Value>,
}

impl Report {
    pub fn table(table: Table) -> Self {
        Report { table, json: None }
    }

    pub fn write<W: Write>(&self, format: Format, mut w: W) -> Result<(), CliError> {
        match format {
            Format::Csv => self.table.write_csv(w),
            Format::Json => {
                let v = self.json.clone().unwrap_or_else(|| self.table.to_json());
                serde_json::to_writer_pretty(&mut w, &v)?;
                writeln!(w)?;
                Ok(())
            }
        }
    }
}
