use std::fs::File;
use std::io::{self, BufWriter, Write};

use crate::config::Format;
use crate::error::CliError;

/// One field of a report row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Num(f64),
    /// Written as an empty CSV field or JSON null when absent.
    Opt(Option<f64>),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Num(x) => x.to_string(),
            Cell::Opt(x) => x.map(|x| x.to_string()).unwrap_or_default(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => s.clone().into(),
            Cell::Int(n) => (*n).into(),
            Cell::Num(x) | Cell::Opt(Some(x)) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
            Cell::Opt(None) => serde_json::Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Opt(x)
    }
}

/// A column-ordered report, written as CSV with a header or as one JSON
/// object per line.
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

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()?;
            }
            Format::Jsonl => {
                for row in &self.rows {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{}:{}", serde_json::Value::from(*c), v.json()))
                        .collect();
                    writeln!(out, "{{{}}}", fields.join(","))?;
                }
            }
            Format::Binary => return Err(CliError::Config("binary output is only available for `sample`".into())),
        }
        Ok(())
    }
}

/// Opens `path`, or stdout for `None` and "-".
pub fn open(path: Option<&str>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None | Some("-") => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Config(format!("cannot create {p}: {e}")))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["model", "price", "stderr", "n"]);
        t.push(vec!["cev".into(), 4.25.into(), None.into(), 10usize.into()]);
        t.push(vec!["a,b".into(), f64::NAN.into(), Some(0.5).into(), 3usize.into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "model,price,stderr,n\ncev,4.25,,10\n\"a,b\",NaN,0.5,3\n");
    }

    #[test]
    fn jsonl_keeps_column_order() {
        let mut buf = Vec::new();
        sample().write(Format::Jsonl, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, r#"{"model":"cev","price":4.25,"stderr":null,"n":10}"#);
        for line in text.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }

    #[test]
    fn binary_is_rejected_for_tables() {
        assert!(sample().write(Format::Binary, &mut Vec::new()).is_err());
    }
}
