//! Pearson correlation analysis and threshold-based feature selection.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::Task;

/// Pearson r. Returns 0 when either vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "pearson needs at least 2 samples".to_string(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Per-group correlation scores against the two label encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group: String,
    /// max |r| over member columns against the 0/1 intrusive label.
    pub binary: f64,
    /// max over classes of |r| against one-vs-rest indicators, then max over
    /// member columns.
    pub multiclass: f64,
}

impl GroupScore {
    pub fn for_task(&self, task: Task) -> f64 {
        match task {
            Task::Binary => self.binary,
            Task::Multiclass => self.multiclass,
        }
    }
}

/// Feature-feature correlation matrix plus per-group label scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub feature_names: Vec<String>,
    pub matrix: Array2<f64>,
    pub groups: Vec<GroupScore>,
}

/// Pairwise Pearson over feature columns. The diagonal is 1 by definition.
pub fn correlation_matrix(t: &DataTable) -> CorrelationReport {
    let n_feat = t.n_features();
    let n_rows = t.n_rows() as f64;

    // Center columns once, then correlations reduce to dot products.
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(n_feat);
    let mut norms: Vec<f64> = Vec::with_capacity(n_feat);
    for c in 0..n_feat {
        let col = t.matrix.column(c);
        let mean = col.sum() / n_rows;
        let v: Vec<f64> = col.iter().map(|&x| x - mean).collect();
        norms.push(v.iter().map(|d| d * d).sum::<f64>().sqrt());
        centered.push(v);
    }

    let rows: Vec<Vec<f64>> = (0..n_feat)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n_feat];
            row[i] = 1.0;
            for j in 0..i {
                let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                    0.0
                } else {
                    let dot: f64 = centered[i]
                        .iter()
                        .zip(&centered[j])
                        .map(|(a, b)| a * b)
                        .sum();
                    dot / (norms[i] * norms[j])
                };
                row[j] = r;
            }
            row
        })
        .collect();
    let mut matrix = Array2::zeros((n_feat, n_feat));
    for (i, row) in rows.iter().enumerate() {
        for j in 0..=i {
            matrix[[i, j]] = row[j];
            matrix[[j, i]] = row[j];
        }
    }

    let y_bin: Vec<f64> = t.y_binary.iter().map(|&v| v as f64).collect();
    let onevsrest: Vec<Vec<f64>> = (0..t.class_names.len())
        .map(|k| t.y_multi.iter().map(|&v| (v == k) as u8 as f64).collect())
        .collect();

    let groups = t
        .feature_groups()
        .into_iter()
        .map(|g| {
            let mut binary: f64 = 0.0;
            let mut multiclass: f64 = 0.0;
            for &c in &g.columns {
                let col: Vec<f64> = t.matrix.column(c).to_vec();
                binary = binary.max(pearson(&col, &y_bin).unwrap_or(0.0).abs());
                for ind in &onevsrest {
                    multiclass = multiclass.max(pearson(&col, ind).unwrap_or(0.0).abs());
                }
            }
            GroupScore {
                group: g.name,
                binary,
                multiclass,
            }
        })
        .collect();

    CorrelationReport {
        feature_names: t.specs.iter().map(|s| s.name.clone()).collect(),
        matrix,
        groups,
    }
}

/// Result of thresholding group label scores. Groups scoring exactly at the
/// threshold are kept ("less than" is dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub mode: Task,
    pub threshold: f64,
    pub kept: Vec<(String, f64)>,
    pub dropped: Vec<(String, f64)>,
}

impl FeatureSelection {
    pub fn kept_names(&self) -> Vec<String> {
        self.kept.iter().map(|(n, _)| n.clone()).collect()
    }
}

pub const DEFAULT_SELECTION_THRESHOLD: f64 = 0.3;

pub fn select_features(
    rep: &CorrelationReport,
    threshold: f64,
    mode: Task,
) -> Result<FeatureSelection> {
    if !(0.0 < threshold && threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "selection threshold must be in (0, 1), got {threshold}"
        )));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for g in &rep.groups {
        let score = g.for_task(mode);
        if score >= threshold {
            kept.push((g.group.clone(), score));
        } else {
            dropped.push((g.group.clone(), score));
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptySelection { threshold });
    }
    Ok(FeatureSelection {
        mode,
        threshold,
        kept,
        dropped,
    })
}
