//! Tabular reports with deterministic serialization.
//!
//! Rows are sorted by the leading key columns before writing, and every
//! float is rounded to six significant digits, so two runs over the same
//! inputs produce byte-identical files.

use std::cmp::Ordering;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Number, Value as Json};

use super::{csv_reader, DataError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Str,
    Int,
    Float,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        Self { name: name.into(), ty }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}
impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}
impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}
impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}
impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}
impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}
impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

impl Value {
    fn matches(&self, ty: ColumnType) -> bool {
        matches!(
            (self, ty),
            (Value::Null, _)
                | (Value::Str(_), ColumnType::Str)
                | (Value::Int(_), ColumnType::Int)
                | (Value::Float(_), ColumnType::Float)
                | (Value::Bool(_), ColumnType::Bool)
        )
    }

    fn cmp_key(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Null, _) => Ordering::Less,
            (_, Value::Null) => Ordering::Greater,
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            _ => Ordering::Equal,
        }
    }

    fn to_cell(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format_float(*v),
            Value::Bool(b) => b.to_string(),
            Value::Null => String::new(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Str(s) => Json::String(s.clone()),
            Value::Int(v) => Json::from(*v),
            Value::Float(v) => Number::from_f64(round_sig6(*v)).map_or(Json::Null, Json::Number),
            Value::Bool(b) => Json::Bool(*b),
            Value::Null => Json::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

/// A typed table. The first `key_columns` columns form the primary key that
/// rows are sorted by on output.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<Column>,
    pub key_columns: usize,
    rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(columns: Vec<Column>, key_columns: usize) -> Self {
        assert!(key_columns <= columns.len());
        Self { columns, key_columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<(), DataError> {
        if row.len() != self.columns.len() {
            return Err(DataError::Report(format!(
                "row has {} values, report has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            if !v.matches(c.ty) {
                return Err(DataError::Report(format!("value {v:?} does not fit column '{}'", c.name)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn sorted_rows(&self) -> Vec<&Vec<Value>> {
        let mut rows: Vec<&Vec<Value>> = self.rows.iter().collect();
        let k = self.key_columns;
        rows.sort_by(|a, b| {
            a[..k]
                .iter()
                .zip(&b[..k])
                .map(|(x, y)| x.cmp_key(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
        rows
    }
}

/// Rounds to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Six-significant-digit rendering: plain decimal for moderate magnitudes,
/// scientific notation otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig6(x);
    if r == 0.0 {
        return "0".into();
    }
    let exp = r.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn render_csv(report: &Report) -> Result<String, DataError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(report.columns.iter().map(|c| c.name.as_str()))?;
    for row in report.sorted_rows() {
        w.write_record(row.iter().map(Value::to_cell))?;
    }
    let bytes = w.into_inner().map_err(|e| DataError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| DataError::Report(e.to_string()))
}

pub fn render_json(report: &Report) -> Result<String, DataError> {
    let rows: Vec<Json> = report
        .sorted_rows()
        .into_iter()
        .map(|row| {
            let obj: Map<String, Json> = report
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.name.clone(), v.to_json()))
                .collect();
            Json::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Json::Array(rows)).map_err(|e| DataError::Report(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(report: &Report, path: &Path, format: ReportFormat) -> Result<(), DataError> {
    let text = match format {
        ReportFormat::Csv => render_csv(report)?,
        ReportFormat::Json => render_json(report)?,
    };
    std::fs::write(path, text).map_err(|e| DataError::io(path, e))
}

/// Reads a CSV report back using a known column schema.
pub fn read_report_csv(path: &Path, columns: Vec<Column>, key_columns: usize) -> Result<Report, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut rdr = csv_reader(file);
    let headers = rdr.headers()?.clone();
    if headers.len() != columns.len() || headers.iter().zip(&columns).any(|(h, c)| h != c.name) {
        return Err(DataError::format(1, "report header does not match schema"));
    }
    let mut report = Report::new(columns, key_columns);
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row?;
        let values = row
            .iter()
            .zip(&report.columns)
            .map(|(cell, col)| parse_cell(cell, col.ty).map_err(|m| DataError::format(line, m)))
            .collect::<Result<Vec<_>, _>>()?;
        report.push(values)?;
    }
    Ok(report)
}

fn parse_cell(cell: &str, ty: ColumnType) -> Result<Value, String> {
    if cell.is_empty() && ty != ColumnType::Str {
        return Ok(Value::Null);
    }
    let bad = |_| format!("cannot parse '{cell}' as {ty:?}");
    Ok(match ty {
        ColumnType::Str => Value::Str(cell.to_string()),
        ColumnType::Int => Value::Int(cell.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
        ColumnType::Float => Value::Float(cell.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?),
        ColumnType::Bool => Value::Bool(cell.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?),
    })
}
