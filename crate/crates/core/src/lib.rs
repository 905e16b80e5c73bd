//! Toolkit for studying how much tabular intrusion detection classifiers
//! rely on individual flow features.
//!
//! The pipeline: ingest flow-record CSVs (UNSW-NB15 layout or a synthetic
//! surrogate), clean and one-hot encode them, min-max scale, train a suite of
//! seven classifiers behind one interface, then quantify each model's feature
//! dependence by occluding feature groups and measuring the accuracy drop.
//! [`experiments`] orchestrates the full studies and [`report`] writes
//! reproducible JSON/CSV/SVG bundles.

pub mod data;
pub mod error;
pub mod experiments;
pub mod explain;
pub mod models;
pub mod report;
pub mod selection;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Which label a study targets: intrusive-vs-normal or the attack category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Binary,
    Multiclass,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Binary, Task::Multiclass];

    pub fn slug(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}
