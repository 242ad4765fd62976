//! Tables and JSON envelopes.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Empty,
}

impl Cell {
    /// Shortest decimal that parses back to the same `f64`.
    fn to_field(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::to_field))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

/// `{version, config, results}`.
pub fn envelope(config: Value, results: Value) -> Value {
    json!({
        "version": critrange::VERSION,
        "config": config,
        "results": results,
    })
}

pub fn json_bytes(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Writes `bytes` to `dir/name`, or to stdout without a directory.
pub fn emit(dir: Option<&Path>, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            std::fs::write(d.join(name), bytes)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// A table in the requested format, named `stem.csv` or `stem.json`.
pub fn emit_table(dir: Option<&Path>, stem: &str, format: Format, config: Value, table: &Table) -> Result<(), CliError> {
    match format {
        Format::Csv => emit(dir, &format!("{stem}.csv"), &table.to_csv()?),
        Format::Json => emit(
            dir,
            &format!("{stem}.json"),
            &json_bytes(&envelope(config, table.to_json_rows()))?,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips() {
        let mut t = Table::new(vec!["i", "x"]);
        let x = 0.1 + 0.2;
        t.push(vec![Cell::Int(3), Cell::Num(x)]);
        t.push(vec![Cell::Empty, Cell::Num(1e-300)]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("i,x"));
        let row = lines.next().unwrap();
        let back: f64 = row.strip_prefix("3,").unwrap().parse().unwrap();
        assert_eq!(back, x);
        assert_eq!(lines.next(), Some(",1e-300"));
    }

    #[test]
    fn json_rows_keep_column_order() {
        let mut t = Table::new(vec!["z", "a"]);
        t.push(vec![Cell::Int(1), Cell::Empty]);
        let s = serde_json::to_string(&t.to_json_rows()).unwrap();
        assert_eq!(s, r#"[{"z":1,"a":null}]"#);
    }
}
