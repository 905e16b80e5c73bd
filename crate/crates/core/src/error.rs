//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),

    #[error("required column '{0}' not found in header")]
    MissingColumn(String),

    #[error("dataset is empty after removing incomplete records")]
    EmptyDataset,

    #[error("table still has a missing cell at row {row}, column '{column}'")]
    MissingCell { row: usize, column: String },

    #[error("label column '{column}' has unusable value '{value}' at row {row}")]
    BadLabel {
        column: String,
        value: String,
        row: usize,
    },

    #[error("split of {n_rows} rows at ratio {ratio} leaves the {side} set empty")]
    DegenerateSplit {
        n_rows: usize,
        ratio: f64,
        side: &'static str,
    },

    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no feature group has correlation >= {threshold}; lower the selection threshold")]
    EmptySelection { threshold: f64 },

    #[error("unknown feature group '{0}'")]
    UnknownGroup(String),

    #[error("model expects {expected} features, input has {found}")]
    FeatureCountMismatch { expected: usize, found: usize },

    #[error("cannot train an iterative model on single-class labels")]
    SingleClass,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("{kind} reached only {accuracy:.3} test accuracy, below the 0.50 sanity guard; check dataset and schema")]
    AccuracyGuard { kind: String, accuracy: f64 },

    #[error("experiment needs at least {needed} feature groups, found {found}")]
    TooFewGroups { needed: usize, found: usize },

    #[error("mask size {k} exceeds the {groups} swept groups")]
    MaskTooLarge { k: usize, groups: usize },

    #[error("removal list is empty")]
    EmptyRemovalList,

    #[error("removing {0:?} would empty the feature set")]
    RemovalEmptiesFeatures(Vec<String>),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("model/table layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("manifest hash mismatch for {path}")]
    HashMismatch { path: PathBuf },

    #[error("figure series '{0}' contains a non-finite value")]
    NonFiniteFigure(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }
}
