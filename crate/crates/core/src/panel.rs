//! Regression panels: named numeric columns plus categorical keys.
//!
//! In CSV form every key column carries the `fe_` prefix so that a panel
//! round-trips without type guessing.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

pub const KEY_PREFIX: &str = "fe_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("row {row} has no column `{column}`")]
    MissingColumn { row: usize, column: String },
    #[error("row {row}: column `{column}` is not finite ({value})")]
    NonFinite { row: usize, column: String, value: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PanelRow {
    pub values: BTreeMap<String, f64>,
    pub keys: BTreeMap<String, String>,
}

impl PanelRow {
    pub fn value(&self, row: usize, column: &str) -> Result<f64, PanelError> {
        let v = *self.values.get(column).ok_or_else(|| PanelError::MissingColumn { row, column: column.into() })?;
        if !v.is_finite() {
            return Err(PanelError::NonFinite { row, column: column.into(), value: v });
        }
        Ok(v)
    }

    pub fn key(&self, row: usize, column: &str) -> Result<&str, PanelError> {
        self.keys
            .get(column)
            .map(String::as_str)
            .ok_or_else(|| PanelError::MissingColumn { row, column: column.into() })
    }
}

/// Extracts a numeric column, failing on the first missing or non-finite cell.
pub fn column(rows: &[PanelRow], name: &str) -> Result<Vec<f64>, PanelError> {
    rows.iter().enumerate().map(|(i, r)| r.value(i, name)).collect()
}

pub fn key_column<'a>(rows: &'a [PanelRow], name: &str) -> Result<Vec<&'a str>, PanelError> {
    rows.iter().enumerate().map(|(i, r)| r.key(i, name)).collect()
}

/// Writes rows with the union of their columns; absent cells are empty.
pub fn write_panel_csv<W: Write>(rows: &[PanelRow], out: W) -> Result<(), PanelError> {
    let csv_err = |e: csv::Error| PanelError::Csv(e.to_string());
    let mut numeric: Vec<&String> = rows.iter().flat_map(|r| r.values.keys()).collect();
    numeric.sort();
    numeric.dedup();
    let mut keys: Vec<&String> = rows.iter().flat_map(|r| r.keys.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> =
        numeric.iter().map(|s| s.to_string()).chain(keys.iter().map(|k| format!("{KEY_PREFIX}{k}"))).collect();
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let record: Vec<String> = numeric
            .iter()
            .map(|c| r.values.get(*c).map(|v| v.to_string()).unwrap_or_default())
            .chain(keys.iter().map(|k| r.keys.get(*k).cloned().unwrap_or_default()))
            .collect();
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| PanelError::Csv(e.to_string()))
}

pub fn read_panel_csv<R: Read>(input: R) -> Result<Vec<PanelRow>, PanelError> {
    let csv_err = |e: csv::Error| PanelError::Csv(e.to_string());
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut row = PanelRow::default();
        for (name, cell) in header.iter().zip(record.iter()) {
            if cell.is_empty() {
                continue;
            }
            if let Some(key) = name.strip_prefix(KEY_PREFIX) {
                row.keys.insert(key.to_string(), cell.to_string());
            } else {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| PanelError::Parse { line, message: format!("column `{name}`: `{cell}` is not a number") })?;
                row.values.insert(name.clone(), v);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
