//! Tabular results written as CSV (17 significant digits) or as a JSON
//! document with the same rows plus run metadata.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // serde_json prints the shortest representation that round-trips.
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Map<String, Value>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
            meta: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .headers
                    .iter()
                    .zip(r)
                    .map(|(h, c)| (h.to_string(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut doc = self.meta.clone();
        doc.insert("rows".into(), Value::Array(rows));
        Value::Object(doc)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes `table` to `path` (CSV when it ends in `.csv`, JSON otherwise) or
/// as CSV to stdout when no path is given.
pub fn emit(table: &Table, path: Option<&Path>) -> io::Result<()> {
    match path {
        None => table.write_csv(io::stdout().lock()).map_err(io::Error::other),
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => {
            table.write_csv(File::create(p)?).map_err(io::Error::other)
        }
        Some(p) => write_json(&table.to_json(), p),
    }
}

pub fn write_json(doc: &Value, path: &Path) -> io::Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, doc)?;
    f.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_exactly() {
        let mut t = Table::new(vec!["x", "label"]);
        let x = 0.1f64 + 0.2;
        t.push(vec![x.into(), "a".into()]);
        t.push(vec![f64::INFINITY.into(), "b".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,label");
        let back: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, x);
        assert_eq!(lines[2], "inf,b");
    }

    #[test]
    fn json_rows_keyed_by_header() {
        let mut t = Table::new(vec!["x"]);
        t.push(vec![1.5.into()]);
        t.meta.insert("command".into(), "test".into());
        let v = t.to_json();
        assert_eq!(v["rows"][0]["x"], 1.5);
        assert_eq!(v["command"], "test");
    }
}
