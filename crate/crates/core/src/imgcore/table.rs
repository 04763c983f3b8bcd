//! Per-image probability tables stored as CSV with an `image` key column.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows of `N` probabilities keyed by image id, sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable<const N: usize> {
    columns: [&'static str; N],
    rows: BTreeMap<String, [f64; N]>,
}

impl<const N: usize> ProbTable<N> {
    pub fn new(columns: [&'static str; N]) -> Self {
        ProbTable {
            columns,
            rows: BTreeMap::new(),
        }
    }

    pub fn columns(&self) -> &[&'static str; N] {
        &self.columns
    }

    pub fn insert(&mut self, image: impl Into<String>, row: [f64; N]) -> Option<[f64; N]> {
        self.rows.insert(image.into(), row)
    }

    pub fn get(&self, image: &str) -> Option<&[f64; N]> {
        self.rows.get(image)
    }

    pub fn rows(&self) -> &BTreeMap<String, [f64; N]> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parses CSV text whose header must be `image` followed by exactly
    /// `columns` (case-insensitive).
    pub fn parse(text: &str, columns: [&'static str; N]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .clone();
        let expected: Vec<&str> = std::iter::once("image").chain(columns).collect();
        let matches = header.len() == expected.len()
            && header
                .iter()
                .zip(&expected)
                .all(|(h, e)| h.eq_ignore_ascii_case(e));
        if !matches {
            return Err(Error::Csv(format!(
                "header {:?} does not match expected {:?}",
                header.iter().collect::<Vec<_>>(),
                expected.join(",")
            )));
        }
        let mut table = ProbTable::new(columns);
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            let row_no = line + 2;
            let image = record.get(0).unwrap_or_default().to_string();
            if image.is_empty() {
                return Err(Error::Csv(format!("row {row_no}: empty image id")));
            }
            let mut values = [0.0; N];
            for (k, v) in values.iter_mut().enumerate() {
                let field = record.get(k + 1).unwrap_or_default();
                *v = field.parse::<f64>().map_err(|_| {
                    Error::Csv(format!(
                        "row {row_no} ({image}): column {} value {field:?} is not a number",
                        columns[k]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv(format!(
                        "row {row_no} ({image}): column {} is not finite",
                        columns[k]
                    )));
                }
            }
            if table.insert(image.clone(), values).is_some() {
                return Err(Error::Csv(format!("row {row_no}: duplicate image id {image}")));
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, columns: [&'static str; N]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, columns).map_err(|e| match e {
            Error::Csv(msg) => Error::Csv(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("image");
        for c in self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (image, row) in &self.rows {
            out.push_str(image);
            for v in row {
                out.push(',');
                // `{}` on f64 is the shortest string that parses back exactly.
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

pub const CLASS_COLUMNS: [&str; 7] = ["MEL", "NV", "BCC", "AKIEC", "BKL", "DF", "VASC"];

/// Classification table in canonical class order.
pub type ClassTable = ProbTable<7>;

pub fn load_class_table(path: impl AsRef<Path>) -> Result<ClassTable> {
    ClassTable::load(path, CLASS_COLUMNS)
}
