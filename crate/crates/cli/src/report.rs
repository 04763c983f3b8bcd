//! Tabular score reports rendered as CSV or JSON lines.

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Real(f64),
    Count(u64),
    Flag(bool),
    Missing,
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

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Count(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Count(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Real)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Real(v) => v.to_string(),
            Cell::Count(v) => v.to_string(),
            Cell::Flag(v) => v.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Real(v) => Value::from(*v),
            Cell::Count(v) => Value::from(*v),
            Cell::Flag(v) => Value::from(*v),
            Cell::Missing => Value::Null,
        }
    }
}

/// One header plus rows of the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A report is one or more tables; CSV prints each with its own header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    tables: Vec<Table>,
}

impl Report {
    pub fn add(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn render(&self, format: ReportFormat, banner: Option<&str>) -> String {
        match format {
            ReportFormat::Csv => self.render_csv(banner),
            ReportFormat::Jsonl => self.render_jsonl(banner),
        }
    }

    fn render_csv(&self, banner: Option<&str>) -> String {
        let mut writer = csv::WriterBuilder::new()
            .flexible(true)
            .from_writer(Vec::new());
        for table in &self.tables {
            writer.write_record(&table.columns).expect("in-memory write");
            for row in &table.rows {
                writer
                    .write_record(row.iter().map(Cell::csv))
                    .expect("in-memory write");
            }
        }
        let body = String::from_utf8(writer.into_inner().expect("in-memory flush"))
            .expect("csv output is UTF-8");
        match banner {
            Some(b) => format!("# {b}\n{body}"),
            None => body,
        }
    }

    fn render_jsonl(&self, banner: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(b) = banner {
            out.push_str(&serde_json::json!({ "banner": b }).to_string());
            out.push('\n');
        }
        for table in &self.tables {
            for row in &table.rows {
                let object: Map<String, Value> = table
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                out.push_str(&Value::Object(object).to_string());
                out.push('\n');
            }
        }
        out
    }
}
