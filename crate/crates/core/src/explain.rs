//! Model-agnostic occlusion sensitivity over feature groups.
//!
//! A group is occluded by replacing its columns with a baseline (training
//! mean by default, zero, or a seeded row permutation) and re-measuring test
//! accuracy; the model is never retrained. Positive degradation means the
//! model relied on the occluded feature.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, FeatureGroup};
use crate::error::{Error, Result};
use crate::models::{accuracy, ModelKind, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionBaseline {
    #[default]
    TrainMean,
    Zero,
    Permute,
}

impl OcclusionBaseline {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train_mean" | "mean" => Some(OcclusionBaseline::TrainMean),
            "zero" => Some(OcclusionBaseline::Zero),
            "permute" => Some(OcclusionBaseline::Permute),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionConfig {
    pub baseline: OcclusionBaseline,
    pub permute_seed: u64,
    /// Restrict the sweep to these groups; `None` sweeps every group.
    pub groups: Option<Vec<String>>,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig {
            baseline: OcclusionBaseline::TrainMean,
            permute_seed: 0,
            groups: None,
        }
    }
}

/// Per-column training-set means, the train_mean replacement values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub column_means: Vec<f64>,
}

impl TrainStats {
    /// Means over the given training rows. A column that is constant on the
    /// training rows gets that exact value, so occluding it is a no-op.
    pub fn from_rows(table: &DataTable, train_idx: &[usize]) -> TrainStats {
        let n = train_idx.len().max(1) as f64;
        let column_means = (0..table.n_features())
            .map(|c| {
                let first = table.matrix[[*train_idx.first().unwrap_or(&0), c]];
                let mut constant = true;
                let mut sum = 0.0;
                for &r in train_idx {
                    let v = table.matrix[[r, c]];
                    sum += v;
                    if v != first {
                        constant = false;
                    }
                }
                if constant {
                    first
                } else {
                    sum / n
                }
            })
            .collect();
        TrainStats { column_means }
    }
}

/// Copy of `x` with the group's columns replaced per the baseline. The
/// permute baseline shuffles the group's rows jointly, preserving one-hot
/// validity.
pub fn occlude(
    x: ArrayView2<f64>,
    group: &FeatureGroup,
    cfg: &OcclusionConfig,
    stats: &TrainStats,
) -> Array2<f64> {
    let mut out = x.to_owned();
    occlude_in_place(&mut out, x, group, cfg, stats);
    out
}

fn occlude_in_place(
    out: &mut Array2<f64>,
    original: ArrayView2<f64>,
    group: &FeatureGroup,
    cfg: &OcclusionConfig,
    stats: &TrainStats,
) {
    match cfg.baseline {
        OcclusionBaseline::Zero => {
            for &c in &group.columns {
                out.column_mut(c).fill(0.0);
            }
        }
        OcclusionBaseline::TrainMean => {
            for &c in &group.columns {
                out.column_mut(c).fill(stats.column_means[c]);
            }
        }
        OcclusionBaseline::Permute => {
            let mut perm: Vec<usize> = (0..original.nrows()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.permute_seed);
            perm.shuffle(&mut rng);
            for (r, &src) in perm.iter().enumerate() {
                for &c in &group.columns {
                    out[[r, c]] = original[[src, c]];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub group: String,
    pub occluded_accuracy: f64,
    pub degradation: f64,
}

/// Occlusion sweep result; `ranking` is sorted by degradation descending
/// (ties keep sweep order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub model: ModelKind,
    pub baseline: OcclusionBaseline,
    pub baseline_accuracy: f64,
    pub ranking: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    pub fn top(&self) -> Option<&SensitivityEntry> {
        self.ranking.first()
    }

    pub fn entry(&self, group: &str) -> Option<&SensitivityEntry> {
        self.ranking.iter().find(|e| e.group == group)
    }
}

fn resolve_groups(table: &DataTable, cfg: &OcclusionConfig) -> Result<Vec<FeatureGroup>> {
    let all = table.feature_groups();
    let groups = match &cfg.groups {
        None => all,
        Some(wanted) => wanted
            .iter()
            .map(|name| {
                all.iter()
                    .find(|g| &g.name == name)
                    .cloned()
                    .ok_or_else(|| Error::UnknownGroup(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if groups.is_empty() {
        return Err(Error::TooFewGroups {
            needed: 1,
            found: 0,
        });
    }
    Ok(groups)
}

/// One occlusion per swept group, re-measuring accuracy each time.
pub fn sensitivity(
    model: &TrainedModel,
    table: &DataTable,
    x_test: ArrayView2<f64>,
    y_test: &[usize],
    cfg: &OcclusionConfig,
    stats: &TrainStats,
) -> Result<SensitivityReport> {
    let groups = resolve_groups(table, cfg)?;
    let baseline_accuracy = accuracy(
        &model.predict(x_test)?,
        y_test,
        model.class_count,
    )?
    .accuracy;

    let entries: Vec<SensitivityEntry> = groups
        .par_iter()
        .map(|group| {
            let occluded = occlude(x_test, group, cfg, stats);
            let pred = model.predict(occluded.view())?;
            let occluded_accuracy = accuracy(&pred, y_test, model.class_count)?.accuracy;
            Ok(SensitivityEntry {
                group: group.name.clone(),
                occluded_accuracy,
                degradation: baseline_accuracy - occluded_accuracy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ranking = entries;
    ranking.sort_by(|a, b| b.degradation.partial_cmp(&a.degradation).unwrap());
    Ok(SensitivityReport {
        model: model.kind,
        baseline: cfg.baseline,
        baseline_accuracy,
        ranking,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingReport {
    pub model: ModelKind,
    pub baseline: OcclusionBaseline,
    pub k: usize,
    pub masked_groups: Vec<String>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub degradation: f64,
}

/// Occludes the top-k groups of `base` simultaneously. Masking a group twice
/// is the same as masking it once; the masked set is deduplicated.
pub fn mask_topk(
    model: &TrainedModel,
    table: &DataTable,
    x_test: ArrayView2<f64>,
    y_test: &[usize],
    base: &SensitivityReport,
    k: usize,
    cfg: &OcclusionConfig,
    stats: &TrainStats,
) -> Result<MaskingReport> {
    if k > base.ranking.len() {
        return Err(Error::MaskTooLarge {
            k,
            groups: base.ranking.len(),
        });
    }
    let mut masked_groups: Vec<String> =
        base.ranking[..k].iter().map(|e| e.group.clone()).collect();
    masked_groups.dedup();

    let all = table.feature_groups();
    let mut out = x_test.to_owned();
    for name in &masked_groups {
        let group = all
            .iter()
            .find(|g| &g.name == name)
            .ok_or_else(|| Error::UnknownGroup(name.clone()))?;
        occlude_in_place(&mut out, x_test, group, cfg, stats);
    }

    let accuracy_before = base.baseline_accuracy;
    let pred = model.predict(out.view())?;
    let accuracy_after = accuracy(&pred, y_test, model.class_count)?.accuracy;
    Ok(MaskingReport {
        model: model.kind,
        baseline: cfg.baseline,
        k,
        masked_groups,
        accuracy_before,
        accuracy_after,
        degradation: accuracy_before - accuracy_after,
    })
}
