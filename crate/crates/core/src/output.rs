//! Tabular output as CSV, JSON, or aligned plain text.

use std::io::Write;

use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use crate::rational::{to_decimal, to_fraction, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Rat(Rational),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Rational> for Cell {
    fn from(v: Rational) -> Self {
        Cell::Rat(v)
    }
}

impl From<&Rational> for Cell {
    fn from(v: &Rational) -> Self {
        Cell::Rat(v.clone())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// How rationals are rendered in text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Style {
    pub places: usize,
    pub exact: bool,
}

impl Cell {
    pub fn render(&self, style: Style) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Rat(r) if style.exact => to_fraction(r),
            Cell::Rat(r) => to_decimal(r, style.places),
            Cell::Float(v) => format!("{v:.*}", style.places + 3),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Rat(r) => json!({ "num": big_json(r.numer()), "den": big_json(r.denom()) }),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

fn big_json(v: &num_bigint::BigInt) -> Value {
    match v.to_i64() {
        Some(i) => json!(i),
        None => json!(v.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|h| h == column)?;
        self.rows.get(row).map(|r| &r[c])
    }

    pub fn write_csv(&self, out: &mut dyn Write, style: Style) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render(style)))?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let map: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect();
                    Value::Object(map)
                })
                .collect(),
        )
    }

    /// Single-row tables print one `key: value` per line; others print
    /// space-aligned columns.
    pub fn write_plain(&self, out: &mut dyn Write, style: Style) -> std::io::Result<()> {
        if self.rows.len() == 1 {
            let width = self.columns.iter().map(String::len).max().unwrap_or(0);
            for (h, c) in self.columns.iter().zip(&self.rows[0]) {
                writeln!(out, "{h:<width$}  {}", c.render(style))?;
            }
            return Ok(());
        }
        let rendered: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(|c| c.render(style)).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                rendered
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.columns[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(out, "{}", line(self.columns.iter().map(String::as_str).collect()))?;
        for r in &rendered {
            writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
        }
        Ok(())
    }

    pub fn write(&self, out: &mut dyn Write, format: Format, style: Style) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out, style),
            Format::Plain => self.write_plain(out, style),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn sample() -> Table {
        let mut t = Table::new(["M", "a_1", "note"]);
        t.push(vec![2usize.into(), ratio(3, 35).into(), "x,y".into()]);
        t.push(vec![3usize.into(), ratio(1, 1).into(), "z".into()]);
        t
    }

    #[test]
    fn csv_decimal_and_exact() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf, Style { places: 3, exact: false }).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "M,a_1,note\n2,0.086,\"x,y\"\n3,1.000,z\n");
        let mut buf = Vec::new();
        sample().write_csv(&mut buf, Style { places: 3, exact: true }).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "M,a_1,note\n2,3/35,\"x,y\"\n3,1,z\n");
    }

    #[test]
    fn json_uses_exact_fractions() {
        let v = sample().to_json();
        assert_eq!(v[0]["a_1"], json!({"num": 3, "den": 35}));
        assert_eq!(v[1]["M"], json!(3));
    }
}
