//! Tabular output in CSV or JSON.
//!
//! CSV: header row, comma separator, LF line endings, no metadata.
//! JSON: `{"meta":{...},"data":[` then one compact object per line, then `]}`.
//! Numbers use the shortest representation that reads back to the same
//! `f64`; non-finite values are written as `inf`, `-inf`, `nan` (strings in
//! JSON). Reading an artifact and writing it again reproduces it byte for byte.

use crate::error::{Error, Result};
use clap::ValueEnum;
use serde_json::{Map, Value};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        serde_json::Number::from_f64(x).expect("finite").to_string()
    }
}

fn special(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => None,
    }
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_num(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn parse_csv(s: &str) -> Cell {
        if s.is_empty() {
            return Cell::Empty;
        }
        if let Some(x) = special(s) {
            return Cell::Num(x);
        }
        if let Ok(i) = s.parse::<i64>() {
            return Cell::Int(i);
        }
        match s.parse::<f64>() {
            Ok(x) => Cell::Num(x),
            Err(_) => Cell::Text(s.to_string()),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Num(x) => match serde_json::Number::from_f64(*x) {
                Some(n) => Value::Number(n),
                None => Value::String(format_num(*x)),
            },
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }

    fn from_json(v: &Value) -> Result<Cell> {
        Ok(match v {
            Value::Null => Cell::Empty,
            Value::Number(n) => match n.as_i64() {
                Some(i) => Cell::Int(i),
                None => Cell::Num(n.as_f64().ok_or_else(|| Error::domain("unsupported number"))?),
            },
            Value::String(s) => special(s).map_or_else(|| Cell::Text(s.clone()), Cell::Num),
            _ => return Err(Error::domain("data cells must be scalars")),
        })
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

/// Writes rows as they arrive.
pub struct RowWriter<'w> {
    out: &'w mut dyn Write,
    format: Format,
    columns: Vec<String>,
    rows: usize,
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn csv_line(fields: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields).map_err(|e| Error::Io(e.to_string()))?;
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

impl<'w> RowWriter<'w> {
    pub fn begin(out: &'w mut dyn Write, format: Format, meta: &Map<String, Value>, columns: &[&str]) -> Result<Self> {
        let columns: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        match format {
            Format::Csv => out.write_all(&csv_line(&columns)?).map_err(io)?,
            Format::Json => {
                let meta = serde_json::to_string(meta).map_err(|e| Error::Io(e.to_string()))?;
                write!(out, "{{\"meta\":{meta},\"data\":[").map_err(io)?;
            }
        }
        Ok(Self {
            out,
            format,
            columns,
            rows: 0,
        })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.columns.len());
        match self.format {
            Format::Csv => {
                let fields: Vec<String> = cells.iter().map(Cell::csv_text).collect();
                self.out.write_all(&csv_line(&fields)?).map_err(io)?;
            }
            Format::Json => {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(cells.iter().map(Cell::json))
                    .collect();
                let sep = if self.rows == 0 { "\n" } else { ",\n" };
                let text = serde_json::to_string(&obj).map_err(|e| Error::Io(e.to_string()))?;
                write!(self.out, "{sep}{text}").map_err(io)?;
            }
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        if self.format == Format::Json {
            writeln!(self.out, "\n]}}").map_err(io)?;
        }
        self.out.flush().map_err(io)
    }
}

/// A fully read artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub meta: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Artifact {
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    pub fn write(&self, format: Format) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        let cols: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        let mut w = RowWriter::begin(&mut buf, format, &self.meta, &cols)?;
        for r in &self.rows {
            w.row(r)?;
        }
        w.finish()?;
        Ok(buf)
    }

    pub fn read(text: &str, format: Format) -> Result<Artifact> {
        match format {
            Format::Csv => {
                let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
                let columns = r
                    .headers()
                    .map_err(|e| Error::domain(format!("bad CSV header: {e}")))?
                    .iter()
                    .map(str::to_string)
                    .collect();
                let mut rows = Vec::new();
                for rec in r.records() {
                    let rec = rec.map_err(|e| Error::domain(format!("bad CSV row: {e}")))?;
                    rows.push(rec.iter().map(Cell::parse_csv).collect());
                }
                Ok(Artifact {
                    meta: Map::new(),
                    columns,
                    rows,
                })
            }
            Format::Json => {
                let v: Value = serde_json::from_str(text).map_err(|e| Error::domain(format!("bad JSON: {e}")))?;
                let meta = v
                    .get("meta")
                    .and_then(Value::as_object)
                    .cloned()
                    .ok_or_else(|| Error::domain("missing meta object"))?;
                let data = v
                    .get("data")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::domain("missing data array"))?;
                let columns: Vec<String> = match data.first().and_then(Value::as_object) {
                    Some(o) => o.keys().cloned().collect(),
                    None => Vec::new(),
                };
                let mut rows = Vec::with_capacity(data.len());
                for d in data {
                    let o = d.as_object().ok_or_else(|| Error::domain("data rows must be objects"))?;
                    let row = columns
                        .iter()
                        .map(|c| Cell::from_json(o.get(c).unwrap_or(&Value::Null)))
                        .collect::<Result<Vec<_>>>()?;
                    rows.push(row);
                }
                Ok(Artifact { meta, columns, rows })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Artifact {
        let mut meta = Map::new();
        meta.insert("p".into(), Value::from(1));
        meta.insert("tau".into(), Value::from(0.1));
        Artifact {
            meta,
            columns: vec!["j".into(), "x".into(), "kind".into(), "maybe".into()],
            rows: vec![
                vec![Cell::Int(0), Cell::Num(1.0), "a".into(), Cell::Empty],
                vec![Cell::Int(1), Cell::Num(-1.25e-300), "b,c".into(), Cell::Num(f64::INFINITY)],
                vec![Cell::Int(2), Cell::Num(0.1), "d".into(), Cell::Num(3e21)],
            ],
        }
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_num(1.0), "1.0");
        assert_eq!(format_num(-0.5), "-0.5");
        assert_eq!(format_num(f64::INFINITY), "inf");
        assert_eq!(format_num(0.1), "0.1");
    }

    #[test]
    fn csv_layout() {
        let text = String::from_utf8(sample().write(Format::Csv).unwrap()).unwrap();
        assert_eq!(text.lines().next(), Some("j,x,kind,maybe"));
        assert_eq!(text.lines().nth(1), Some("0,1.0,a,"));
        assert!(text.contains("\"b,c\""));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn json_layout() {
        let text = String::from_utf8(sample().write(Format::Json).unwrap()).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["meta"]["p"], 1);
        assert_eq!(v["data"][1]["maybe"], "inf");
        assert_eq!(v["data"][0]["maybe"], Value::Null);
        assert_eq!(v["data"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn round_trips() {
        for f in [Format::Csv, Format::Json] {
            let once = sample().write(f).unwrap();
            let back = Artifact::read(std::str::from_utf8(&once).unwrap(), f).unwrap();
            assert_eq!(back.write(f).unwrap(), once);
        }
    }

    #[test]
    fn empty_json_table() {
        let a = Artifact {
            meta: Map::new(),
            columns: vec!["x".into()],
            rows: vec![],
        };
        let text = a.write(Format::Json).unwrap();
        let back = Artifact::read(std::str::from_utf8(&text).unwrap(), Format::Json).unwrap();
        assert!(back.rows.is_empty());
        assert_eq!(back.write(Format::Json).unwrap(), text);
    }

    #[test]
    fn malformed_input() {
        assert!(Artifact::read("{\"data\":[]}", Format::Json).is_err());
        assert!(Artifact::read("not json", Format::Json).is_err());
        assert!(Artifact::read("a,b\n1,2,3\n", Format::Csv).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(xs in proptest::collection::vec(any::<f64>(), 1..20)) {
            let a = Artifact {
                meta: Map::new(),
                columns: vec!["x".into()],
                rows: xs.iter().map(|&x| vec![Cell::Num(x)]).collect(),
            };
            for f in [Format::Csv, Format::Json] {
                let once = a.write(f).unwrap();
                let back = Artifact::read(std::str::from_utf8(&once).unwrap(), f).unwrap();
                prop_assert_eq!(back.write(f).unwrap(), once);
            }
        }
    }
}
