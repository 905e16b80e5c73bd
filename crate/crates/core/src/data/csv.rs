//! RFC-4180 CSV ingestion with per-column type detection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Cell, RawTable};
use crate::error::{Error, Result};

/// Names of the label, category, and id columns plus any columns that must be
/// treated as categorical even though they parse as numbers. Defaults match
/// the UNSW-NB15 layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub label_column: String,
    pub category_column: String,
    pub id_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            label_column: "label".to_string(),
            category_column: "attack_cat".to_string(),
            id_columns: vec!["id".to_string()],
            categorical_columns: Vec::new(),
        }
    }
}

impl Schema {
    /// Reads overrides from a small TOML file; absent keys keep defaults.
    pub fn from_toml_file(path: &Path) -> Result<Schema> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidInput(format!(
            "schema file {}: {e}",
            path.display()
        )))
    }
}

/// Empty cells, "-", and NaN-text are treated as missing (UNSW-NB15 CSV
/// conventions).
fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t == "-" || t.eq_ignore_ascii_case("nan")
}

/// Loads a CSV with a header row. A column becomes numeric when every
/// non-missing cell parses as a number, otherwise it stays text.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let column_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let n_cols = column_names.len();
    for (i, name) in column_names.iter().enumerate() {
        if column_names[..i].contains(name) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    for required in [&schema.label_column, &schema.category_column] {
        if !column_names.contains(required) {
            return Err(Error::MissingColumn(required.clone()));
        }
    }

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if record.len() != n_cols {
            return Err(Error::RaggedRow {
                row: r + 1,
                expected: n_cols,
                found: record.len(),
            });
        }
        raw_rows.push(record.iter().map(|s| s.to_string()).collect());
    }

    let numeric: Vec<bool> = (0..n_cols)
        .map(|c| {
            raw_rows
                .iter()
                .all(|row| is_missing(&row[c]) || row[c].trim().parse::<f64>().is_ok())
        })
        .collect();

    let rows: Vec<Vec<Cell>> = raw_rows
        .into_iter()
        .map(|row| {
            row.into_iter()
                .enumerate()
                .map(|(c, s)| {
                    if is_missing(&s) {
                        Cell::Missing
                    } else if numeric[c] {
                        Cell::Num(s.trim().parse::<f64>().unwrap())
                    } else {
                        Cell::Text(s)
                    }
                })
                .collect()
        })
        .collect();

    RawTable::new(column_names, rows)
}
