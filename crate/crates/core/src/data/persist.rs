//! On-disk format for a processed table: metadata as JSON next to the
//! feature matrix as CSV. Floats round-trip exactly through their shortest
//! decimal form.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnSpec, DataTable, SplitIndices};
use crate::error::{Error, Result};

pub const TABLE_FILE: &str = "table.json";
pub const MATRIX_FILE: &str = "matrix.csv";

#[derive(Serialize, Deserialize)]
struct TableMeta {
    format_version: u32,
    specs: Vec<ColumnSpec>,
    y_binary: Vec<usize>,
    y_multi: Vec<usize>,
    class_names: Vec<String>,
    split: SplitIndices,
}

const FORMAT_VERSION: u32 = 1;

/// Writes `table.json` + `matrix.csv` into `dir` (created if needed).
pub fn save_table(dir: &Path, table: &DataTable, split: &SplitIndices) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    let meta = TableMeta {
        format_version: FORMAT_VERSION,
        specs: table.specs.clone(),
        y_binary: table.y_binary.clone(),
        y_multi: table.y_multi.clone(),
        class_names: table.class_names.clone(),
        split: split.clone(),
    };
    let meta_path = dir.join(TABLE_FILE);
    let json = serde_json::to_string_pretty(&meta)?;
    std::fs::write(&meta_path, json).map_err(|e| Error::write(&meta_path, e))?;

    let csv_path = dir.join(MATRIX_FILE);
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Csv {
        path: csv_path.clone(),
        message: e.to_string(),
    })?;
    let names: Vec<&str> = table.specs.iter().map(|s| s.name.as_str()).collect();
    w.write_record(&names).map_err(|e| Error::Csv {
        path: csv_path.clone(),
        message: e.to_string(),
    })?;
    for r in 0..table.n_rows() {
        let row: Vec<String> = (0..table.n_features())
            .map(|c| table.matrix[[r, c]].to_string())
            .collect();
        w.write_record(&row).map_err(|e| Error::Csv {
            path: csv_path.clone(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::write(&csv_path, e))?;
    Ok(())
}

/// Reads a table written by [`save_table`].
pub fn load_table(dir: &Path) -> Result<(DataTable, SplitIndices)> {
    let meta_path = dir.join(TABLE_FILE);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: TableMeta = serde_json::from_str(&text)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: meta.format_version,
            expected: FORMAT_VERSION,
        });
    }

    let csv_path = dir.join(MATRIX_FILE);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&csv_path)
        .map_err(|e| Error::Csv {
            path: csv_path.clone(),
            message: e.to_string(),
        })?;
    let n_features = meta.specs.len();
    let mut values: Vec<f64> = Vec::new();
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: csv_path.clone(),
            message: e.to_string(),
        })?;
        if record.len() != n_features {
            return Err(Error::RaggedRow {
                row: n_rows + 1,
                expected: n_features,
                found: record.len(),
            });
        }
        for cell in record.iter() {
            values.push(cell.parse::<f64>().map_err(|_| Error::Csv {
                path: csv_path.clone(),
                message: format!("non-numeric cell '{cell}' in matrix"),
            })?);
        }
        n_rows += 1;
    }
    let matrix = Array2::from_shape_vec((n_rows, n_features), values)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let table = DataTable {
        specs: meta.specs,
        matrix,
        y_binary: meta.y_binary,
        y_multi: meta.y_multi,
        class_names: meta.class_names,
    };
    if table.y_binary.len() != n_rows || table.y_multi.len() != n_rows {
        return Err(Error::InvalidInput(
            "label vectors do not match matrix row count".to_string(),
        ));
    }
    Ok((table, meta.split))
}
