//! Ingestion and preparation of flow-record tables: cleaning, one-hot
//! encoding, min-max scaling, and train/test splitting.

mod csv;
pub mod persist;
mod synthetic;

pub use csv::{load_csv, Schema};
pub use synthetic::{make_synthetic, SyntheticSpec};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One raw CSV cell after type detection.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// An untyped-but-parsed table straight from a CSV file or the synthetic
/// generator. Every row has exactly `column_names.len()` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl RawTable {
    /// Builds a table, validating the row-width and unique-name invariants.
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let n_cols = column_names.len();
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::RaggedRow {
                    row: r + 1,
                    expected: n_cols,
                    found: row.len(),
                });
            }
        }
        Ok(RawTable { column_names, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// True when every non-missing cell of the column parses as a number.
    pub fn column_is_numeric(&self, col: usize) -> bool {
        self.rows
            .iter()
            .all(|row| matches!(row[col], Cell::Num(_) | Cell::Missing))
    }
}

/// Removes every row that contains a missing cell; order is preserved.
pub fn drop_incomplete(t: &RawTable) -> Result<RawTable> {
    let rows: Vec<Vec<Cell>> = t
        .rows
        .iter()
        .filter(|row| !row.iter().any(Cell::is_missing))
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(RawTable {
        column_names: t.column_names.clone(),
        rows,
    })
}

/// Role of a column in the encoded feature matrix or the raw schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    BinaryLabel,
    MulticlassLabel,
    Id,
}

/// Metadata for one encoded feature column. Indicator columns produced from
/// the same categorical source share an `onehot_group`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub onehot_group: Option<String>,
}

/// A contiguous set of encoded columns originating from one source feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

/// Model-ready table: numeric feature matrix plus both label vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub specs: Vec<ColumnSpec>,
    pub matrix: Array2<f64>,
    /// 1 = intrusive, 0 = normal.
    pub y_binary: Vec<usize>,
    /// Index into `class_names`.
    pub y_multi: Vec<usize>,
    pub class_names: Vec<String>,
}

impl DataTable {
    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }

    /// Feature groups in first-occurrence order. A plain numeric column forms
    /// its own group; one-hot indicator columns group under their source name.
    pub fn feature_groups(&self) -> Vec<FeatureGroup> {
        let mut groups: Vec<FeatureGroup> = Vec::new();
        for (idx, spec) in self.specs.iter().enumerate() {
            let key = spec.onehot_group.clone().unwrap_or_else(|| spec.name.clone());
            match groups.iter_mut().find(|g| g.name == key) {
                Some(g) => g.columns.push(idx),
                None => groups.push(FeatureGroup {
                    name: key,
                    columns: vec![idx],
                }),
            }
        }
        groups
    }

    /// New table with the named groups removed.
    pub fn drop_groups(&self, names: &[String]) -> Result<DataTable> {
        let groups = self.feature_groups();
        for name in names {
            if !groups.iter().any(|g| &g.name == name) {
                return Err(Error::UnknownGroup(name.clone()));
            }
        }
        let keep: Vec<String> = groups
            .iter()
            .filter(|g| !names.contains(&g.name))
            .map(|g| g.name.clone())
            .collect();
        if keep.is_empty() {
            return Err(Error::RemovalEmptiesFeatures(names.to_vec()));
        }
        self.select_groups(&keep)
    }

    /// New table containing only the named groups, in this table's column order.
    pub fn select_groups(&self, names: &[String]) -> Result<DataTable> {
        let groups = self.feature_groups();
        for name in names {
            if !groups.iter().any(|g| &g.name == name) {
                return Err(Error::UnknownGroup(name.clone()));
            }
        }
        let cols: Vec<usize> = groups
            .iter()
            .filter(|g| names.contains(&g.name))
            .flat_map(|g| g.columns.iter().copied())
            .collect();
        let specs: Vec<ColumnSpec> = cols.iter().map(|&c| self.specs[c].clone()).collect();
        let mut matrix = Array2::zeros((self.n_rows(), cols.len()));
        for (new_c, &old_c) in cols.iter().enumerate() {
            matrix.column_mut(new_c).assign(&self.matrix.column(old_c));
        }
        Ok(DataTable {
            specs,
            matrix,
            y_binary: self.y_binary.clone(),
            y_multi: self.y_multi.clone(),
            class_names: self.class_names.clone(),
        })
    }

    /// Feature matrix restricted to the given rows.
    pub fn rows_matrix(&self, idx: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((idx.len(), self.n_features()));
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).assign(&self.matrix.row(r));
        }
        out
    }

    /// Labels for a task restricted to the given rows.
    pub fn labels(&self, task: crate::Task, idx: &[usize]) -> Vec<usize> {
        let source = match task {
            crate::Task::Binary => &self.y_binary,
            crate::Task::Multiclass => &self.y_multi,
        };
        idx.iter().map(|&r| source[r]).collect()
    }

    pub fn class_count(&self, task: crate::Task) -> usize {
        match task {
            crate::Task::Binary => 2,
            crate::Task::Multiclass => self.class_names.len(),
        }
    }
}

/// One-hot encodes categoricals, extracts both label vectors, drops id
/// columns. The input must be free of missing cells.
pub fn encode(t: &RawTable, schema: &Schema) -> Result<DataTable> {
    for (r, row) in t.rows.iter().enumerate() {
        if let Some(c) = row.iter().position(Cell::is_missing) {
            return Err(Error::MissingCell {
                row: r + 1,
                column: t.column_names[c].clone(),
            });
        }
    }
    let label_col = t
        .column_index(&schema.label_column)
        .ok_or_else(|| Error::MissingColumn(schema.label_column.clone()))?;
    let category_col = t
        .column_index(&schema.category_column)
        .ok_or_else(|| Error::MissingColumn(schema.category_column.clone()))?;

    // Binary label: nonzero numeric cell = intrusive.
    let mut y_binary = Vec::with_capacity(t.n_rows());
    for (r, row) in t.rows.iter().enumerate() {
        match &row[label_col] {
            Cell::Num(v) => y_binary.push((*v != 0.0) as usize),
            other => {
                return Err(Error::BadLabel {
                    column: schema.label_column.clone(),
                    value: cell_text(other),
                    row: r + 1,
                })
            }
        }
    }

    // Multi-class label: category names, sorted for a stable class order.
    let mut class_names: Vec<String> = Vec::new();
    for (r, row) in t.rows.iter().enumerate() {
        let name = match &row[category_col] {
            Cell::Text(s) if !s.trim().is_empty() => s.clone(),
            Cell::Num(v) => v.to_string(),
            other => {
                return Err(Error::BadLabel {
                    column: schema.category_column.clone(),
                    value: cell_text(other),
                    row: r + 1,
                })
            }
        };
        if !class_names.contains(&name) {
            class_names.push(name);
        }
    }
    class_names.sort();
    let y_multi: Vec<usize> = t
        .rows
        .iter()
        .map(|row| {
            let name = match &row[category_col] {
                Cell::Text(s) => s.clone(),
                Cell::Num(v) => v.to_string(),
                Cell::Missing => unreachable!("checked above"),
            };
            class_names.iter().position(|c| c == &name).unwrap()
        })
        .collect();

    // Feature columns.
    let mut specs: Vec<ColumnSpec> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (c, name) in t.column_names.iter().enumerate() {
        if c == label_col || c == category_col || schema.id_columns.contains(name) {
            continue;
        }
        let forced = schema.categorical_columns.contains(name);
        if t.column_is_numeric(c) && !forced {
            specs.push(ColumnSpec {
                name: name.clone(),
                kind: ColumnKind::Numeric,
                onehot_group: None,
            });
            columns.push(
                t.rows
                    .iter()
                    .map(|row| match &row[c] {
                        Cell::Num(v) => *v,
                        _ => unreachable!("numeric column"),
                    })
                    .collect(),
            );
        } else {
            let mut levels: Vec<String> = Vec::new();
            let values: Vec<String> = t
                .rows
                .iter()
                .map(|row| cell_text(&row[c]))
                .collect();
            for v in &values {
                if !levels.contains(v) {
                    levels.push(v.clone());
                }
            }
            levels.sort();
            if levels.len() == 1 {
                log::warn!(
                    "categorical column '{name}' has a single level '{}'; emitting one constant indicator",
                    levels[0]
                );
            }
            for level in &levels {
                specs.push(ColumnSpec {
                    name: format!("{name}={level}"),
                    kind: ColumnKind::Numeric,
                    onehot_group: Some(name.clone()),
                });
                columns.push(
                    values
                        .iter()
                        .map(|v| if v == level { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
    }

    let n_rows = t.n_rows();
    let mut matrix = Array2::zeros((n_rows, columns.len()));
    for (c, col) in columns.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            matrix[[r, c]] = v;
        }
    }

    Ok(DataTable {
        specs,
        matrix,
        y_binary,
        y_multi,
        class_names,
    })
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Text(s) => s.clone(),
        Cell::Num(v) => v.to_string(),
        Cell::Missing => String::new(),
    }
}

/// Per-feature (min, max) pairs learned from training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

pub fn fit_scaler(t: &DataTable, idx: &SplitIndices) -> ScalerParams {
    let n = t.n_features();
    let mut mins = vec![f64::INFINITY; n];
    let mut maxs = vec![f64::NEG_INFINITY; n];
    for &r in &idx.train {
        for c in 0..n {
            let v = t.matrix[[r, c]];
            if v < mins[c] {
                mins[c] = v;
            }
            if v > maxs[c] {
                maxs[c] = v;
            }
        }
    }
    ScalerParams { mins, maxs }
}

/// Rescales every feature to [0, 1]. Values outside the training range are
/// clamped; constant training columns map to 0.
pub fn apply_scaler(t: &DataTable, p: &ScalerParams) -> DataTable {
    let mut out = t.clone();
    for c in 0..t.n_features() {
        let (min, max) = (p.mins[c], p.maxs[c]);
        let range = max - min;
        for r in 0..t.n_rows() {
            let v = t.matrix[[r, c]];
            out.matrix[[r, c]] = if range == 0.0 {
                0.0
            } else {
                ((v - min) / range).clamp(0.0, 1.0)
            };
        }
    }
    out
}

/// Disjoint train/test row indices from a seeded uniform shuffle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

pub fn split(n_rows: usize, ratio: f64, seed: u64) -> Result<SplitIndices> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    if n_rows < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 rows to split, got {n_rows}"
        )));
    }
    let n_train = (ratio * n_rows as f64).round() as usize;
    if n_train == 0 {
        return Err(Error::DegenerateSplit {
            n_rows,
            ratio,
            side: "train",
        });
    }
    if n_train == n_rows {
        return Err(Error::DegenerateSplit {
            n_rows,
            ratio,
            side: "test",
        });
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let test = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        test,
        seed,
        ratio,
    })
}

/// Per-class fractions of the multi-class label, sorted descending.
pub fn class_distribution(t: &DataTable) -> Vec<(String, f64)> {
    let mut counts = vec![0usize; t.class_names.len()];
    for &c in &t.y_multi {
        counts[c] += 1;
    }
    let n = t.n_rows() as f64;
    let mut dist: Vec<(String, f64)> = t
        .class_names
        .iter()
        .cloned()
        .zip(counts.iter().map(|&c| c as f64 / n))
        .collect();
    dist.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    dist
}
