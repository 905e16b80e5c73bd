//! Reproducible result bundles: canonical JSON documents, fixed-column CSV
//! tables, and self-contained SVG figures, all listed in a hashed manifest.
//!
//! Wall-clock measurements are split into `timings.json` and the
//! overhead tables/figures, which are flagged volatile in the manifest and
//! carry no hash; every other file is byte-identical across reruns of the
//! same spec and seed.

pub mod json;
pub mod svg;

pub use svg::{render_svg, FigureKind, FigureSpec, Series};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{EnvFingerprint, ExperimentName, ExperimentResult, ModelRun};
use crate::explain::SensitivityReport;
use crate::selection::{CorrelationReport, FeatureSelection};
use crate::Task;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub volatile: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestExperiment {
    pub name: ExperimentName,
    pub task: Task,
    pub seed: u64,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit_version: String,
    pub environment: EnvFingerprint,
    pub experiments: Vec<ManifestExperiment>,
    pub files: BTreeMap<String, FileEntry>,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub root: PathBuf,
    pub manifest: Manifest,
}

pub fn hash_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

struct BundleWriter {
    root: PathBuf,
    files: BTreeMap<String, FileEntry>,
}

impl BundleWriter {
    fn new(root: &Path) -> Result<BundleWriter> {
        std::fs::create_dir_all(root).map_err(|e| Error::write(root, e))?;
        Ok(BundleWriter {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn write(&mut self, rel: &str, content: &str, volatile: bool) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::write(parent, e))?;
        }
        std::fs::write(&path, content).map_err(|e| Error::write(&path, e))?;
        self.files.insert(
            rel.to_string(),
            FileEntry {
                sha256: if volatile {
                    None
                } else {
                    Some(hash_hex(content.as_bytes()))
                },
                volatile,
            },
        );
        Ok(())
    }
}

/// Writes one bundle directory for the given results and returns its manifest.
pub fn write_bundle(results: &[ExperimentResult], dir: &Path) -> Result<Bundle> {
    let mut writer = BundleWriter::new(dir)?;
    let mut timings = serde_json::Map::new();
    let mut experiments = Vec::new();

    for result in results {
        let exp_dir = format!("experiments/{}", result.spec.dir_name());
        if experiments.iter().any(|e: &ManifestExperiment| e.dir == exp_dir) {
            return Err(Error::InvalidSpec(format!(
                "duplicate experiment directory '{exp_dir}'"
            )));
        }
        experiments.push(ManifestExperiment {
            name: result.spec.name,
            task: result.spec.task,
            seed: result.spec.seed,
            dir: exp_dir.clone(),
        });

        let full = serde_json::to_value(result)?;
        let (stable, volatile) = json::split_volatile(full);
        writer.write(&format!("{exp_dir}/result.json"), &json::canonical(&stable), false)?;
        if let Some(v) = volatile {
            timings.insert(result.spec.dir_name(), v);
        }

        write_tables_and_figures(&mut writer, &exp_dir, result)?;
    }

    writer.write(
        TIMINGS_FILE,
        &json::canonical(&Value::Object(timings)),
        true,
    )?;

    let manifest = Manifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        environment: EnvFingerprint::detect(),
        experiments,
        files: writer.files.clone(),
    };
    let manifest_json = json::canonical(&serde_json::to_value(&manifest)?);
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, &manifest_json).map_err(|e| Error::write(&manifest_path, e))?;

    Ok(Bundle {
        root: dir.to_path_buf(),
        manifest,
    })
}

/// Recomputes every non-volatile hash in an existing bundle.
pub fn verify_bundle(dir: &Path) -> Result<Manifest> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    for (rel, entry) in &manifest.files {
        let path = dir.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if let Some(expected) = &entry.sha256 {
            if &hash_hex(&bytes) != expected {
                return Err(Error::HashMismatch { path });
            }
        }
    }
    Ok(manifest)
}

fn write_tables_and_figures(
    writer: &mut BundleWriter,
    exp_dir: &str,
    result: &ExperimentResult,
) -> Result<()> {
    let task = result.spec.task;
    match result.spec.name {
        ExperimentName::FullSensitivity
        | ExperimentName::SelectedSensitivity
        | ExperimentName::RetrainWithoutTop => {
            writer.write(
                &format!("{exp_dir}/tables/sensitivity.csv"),
                &sensitivity_table(&result.models)?,
                false,
            )?;
            if let Some(fig) = sensitivity_figure(result) {
                writer.write(
                    &format!("{exp_dir}/figures/sensitivity.svg"),
                    &render_svg(&fig)?,
                    false,
                )?;
            }
            if let Some(outcome) = &result.selection {
                writer.write(
                    &format!("{exp_dir}/tables/correlation_matrix.csv"),
                    &correlation_table(&outcome.report)?,
                    false,
                )?;
                writer.write(
                    &format!("{exp_dir}/tables/selection.csv"),
                    &selection_table(&outcome.selection)?,
                    false,
                )?;
                writer.write(
                    &format!("{exp_dir}/figures/correlation_heatmap.svg"),
                    &render_svg(&correlation_figure(&outcome.report, task))?,
                    false,
                )?;
                writer.write(
                    &format!("{exp_dir}/figures/selection_scores.svg"),
                    &render_svg(&selection_figure(&outcome.selection, task))?,
                    false,
                )?;
            }
            if result.spec.name == ExperimentName::RetrainWithoutTop {
                writer.write(
                    &format!("{exp_dir}/tables/accuracy_change.csv"),
                    &accuracy_change_table(&result.models)?,
                    false,
                )?;
            }
        }
        ExperimentName::Top2Masking => {
            writer.write(
                &format!("{exp_dir}/tables/masking.csv"),
                &masking_table(&result.models)?,
                false,
            )?;
            if let Some(fig) = masking_figure(result) {
                writer.write(
                    &format!("{exp_dir}/figures/masking.svg"),
                    &render_svg(&fig)?,
                    false,
                )?;
            }
        }
        ExperimentName::Overhead => {
            if let Some(overhead) = &result.overhead {
                let table = overhead_table(overhead)?;
                writer.write(&format!("{exp_dir}/tables/overhead.csv"), &table, true)?;
                writer.write(
                    &format!("{exp_dir}/figures/overhead.svg"),
                    &render_svg(&overhead_figure(overhead, task))?,
                    true,
                )?;
            }
        }
    }
    Ok(())
}

fn csv_string(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// Columns: model, group, baseline_accuracy, occluded_accuracy, degradation.
pub fn sensitivity_table(models: &[ModelRun]) -> Result<String> {
    let mut rows = vec![vec![
        "model".to_string(),
        "group".to_string(),
        "baseline_accuracy".to_string(),
        "occluded_accuracy".to_string(),
        "degradation".to_string(),
    ]];
    for run in models {
        if let Some(rep) = &run.sensitivity {
            for e in &rep.ranking {
                rows.push(vec![
                    run.kind.name().to_string(),
                    e.group.clone(),
                    fmt(rep.baseline_accuracy),
                    fmt(e.occluded_accuracy),
                    fmt(e.degradation),
                ]);
            }
        }
    }
    csv_string(&rows)
}

/// Columns: model, masked_groups (| separated), accuracy_before,
/// accuracy_after, degradation.
pub fn masking_table(models: &[ModelRun]) -> Result<String> {
    let mut rows = vec![vec![
        "model".to_string(),
        "masked_groups".to_string(),
        "accuracy_before".to_string(),
        "accuracy_after".to_string(),
        "degradation".to_string(),
    ]];
    for run in models {
        if let Some(m) = &run.masking {
            rows.push(vec![
                run.kind.name().to_string(),
                m.masked_groups.join("|"),
                fmt(m.accuracy_before),
                fmt(m.accuracy_after),
                fmt(m.degradation),
            ]);
        }
    }
    csv_string(&rows)
}

/// Columns: feature, then one column per feature.
pub fn correlation_table(report: &CorrelationReport) -> Result<String> {
    let mut header = vec!["feature".to_string()];
    header.extend(report.feature_names.iter().cloned());
    let mut rows = vec![header];
    for (i, name) in report.feature_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        for j in 0..report.feature_names.len() {
            row.push(fmt(report.matrix[[i, j]]));
        }
        rows.push(row);
    }
    csv_string(&rows)
}

/// Columns: group, score, kept.
pub fn selection_table(selection: &FeatureSelection) -> Result<String> {
    let mut rows = vec![vec![
        "group".to_string(),
        "score".to_string(),
        "kept".to_string(),
    ]];
    for (name, score) in &selection.kept {
        rows.push(vec![name.clone(), fmt(*score), "true".to_string()]);
    }
    for (name, score) in &selection.dropped {
        rows.push(vec![name.clone(), fmt(*score), "false".to_string()]);
    }
    csv_string(&rows)
}

/// Columns: model, accuracy_before, accuracy_after, delta.
pub fn accuracy_change_table(models: &[ModelRun]) -> Result<String> {
    let mut rows = vec![vec![
        "model".to_string(),
        "accuracy_before".to_string(),
        "accuracy_after".to_string(),
        "delta".to_string(),
    ]];
    for run in models {
        if let Some(before) = run.accuracy_before_removal {
            rows.push(vec![
                run.kind.name().to_string(),
                fmt(before),
                fmt(run.metrics.accuracy),
                fmt(run.metrics.accuracy - before),
            ]);
        }
    }
    csv_string(&rows)
}

/// Columns: model, epochs_run, median_train_secs, median_predict_per_1k_secs.
pub fn overhead_table(report: &crate::experiments::OverheadReport) -> Result<String> {
    let mut rows = vec![vec![
        "model".to_string(),
        "epochs_run".to_string(),
        "median_train_secs".to_string(),
        "median_predict_per_1k_secs".to_string(),
    ]];
    for e in &report.entries {
        rows.push(vec![
            e.kind.name().to_string(),
            e.epochs_run.to_string(),
            fmt(e.median_train_secs),
            fmt(e.median_predict_per_1k_secs),
        ]);
    }
    csv_string(&rows)
}

/// Grouped bars of per-group degradation, one series per model. Group order
/// follows the first model's ranking.
pub fn sensitivity_figure(result: &ExperimentResult) -> Option<FigureSpec> {
    let with_reports: Vec<(&ModelRun, &SensitivityReport)> = result
        .models
        .iter()
        .filter_map(|m| m.sensitivity.as_ref().map(|r| (m, r)))
        .collect();
    let (_, first) = with_reports.first()?;
    let labels: Vec<String> = first.ranking.iter().map(|e| e.group.clone()).collect();
    let series = with_reports
        .iter()
        .map(|(run, rep)| Series {
            name: run.kind.name().to_string(),
            values: labels
                .iter()
                .map(|g| rep.entry(g).map_or(0.0, |e| e.degradation))
                .collect(),
        })
        .collect();
    Some(FigureSpec {
        kind: FigureKind::GroupedBar,
        title: format!(
            "Accuracy degradation per occluded feature group ({})",
            result.spec.task
        ),
        x_label: "feature group".to_string(),
        y_label: "accuracy degradation".to_string(),
        labels,
        series,
    })
}

/// One bar per model: joint degradation after masking its top-2 groups.
pub fn masking_figure(result: &ExperimentResult) -> Option<FigureSpec> {
    let masked: Vec<(&ModelRun, f64)> = result
        .models
        .iter()
        .filter_map(|m| m.masking.as_ref().map(|k| (m, k.degradation)))
        .collect();
    if masked.is_empty() {
        return None;
    }
    Some(FigureSpec {
        kind: FigureKind::Bar,
        title: format!(
            "Accuracy degradation after masking the top-2 feature groups ({})",
            result.spec.task
        ),
        x_label: "model".to_string(),
        y_label: "accuracy degradation".to_string(),
        labels: masked.iter().map(|(m, _)| m.kind.name().to_string()).collect(),
        series: vec![Series {
            name: "top-2 masking".to_string(),
            values: masked.iter().map(|(_, d)| *d).collect(),
        }],
    })
}

pub fn correlation_figure(report: &CorrelationReport, task: Task) -> FigureSpec {
    FigureSpec {
        kind: FigureKind::Heatmap,
        title: format!("Feature correlation matrix ({task})"),
        x_label: String::new(),
        y_label: String::new(),
        labels: report.feature_names.clone(),
        series: report
            .feature_names
            .iter()
            .enumerate()
            .map(|(i, name)| Series {
                name: name.clone(),
                values: (0..report.feature_names.len())
                    .map(|j| report.matrix[[i, j]])
                    .collect(),
            })
            .collect(),
    }
}

pub fn selection_figure(selection: &FeatureSelection, task: Task) -> FigureSpec {
    let mut scored: Vec<(String, f64)> = selection
        .kept
        .iter()
        .chain(selection.dropped.iter())
        .cloned()
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    FigureSpec {
        kind: FigureKind::Bar,
        title: format!(
            "Label correlation per feature group, threshold {} ({task})",
            selection.threshold
        ),
        x_label: "feature group".to_string(),
        y_label: "|r| against label".to_string(),
        labels: scored.iter().map(|(n, _)| n.clone()).collect(),
        series: vec![Series {
            name: "|r|".to_string(),
            values: scored.iter().map(|(_, v)| *v).collect(),
        }],
    }
}

pub fn overhead_figure(report: &crate::experiments::OverheadReport, task: Task) -> FigureSpec {
    FigureSpec {
        kind: FigureKind::GroupedBar,
        title: format!("Model overhead: training and inference wall time ({task})"),
        x_label: "model".to_string(),
        y_label: "seconds".to_string(),
        labels: report
            .entries
            .iter()
            .map(|e| e.kind.name().to_string())
            .collect(),
        series: vec![
            Series {
                name: "train (s)".to_string(),
                values: report.entries.iter().map(|e| e.median_train_secs).collect(),
            },
            Series {
                name: "predict per 1k rows (s)".to_string(),
                values: report
                    .entries
                    .iter()
                    .map(|e| e.median_predict_per_1k_secs)
                    .collect(),
            },
        ],
    }
}

/// Class-distribution chart with percentage labels.
pub fn distribution_figure(dist: &[(String, f64)]) -> FigureSpec {
    FigureSpec {
        kind: FigureKind::Distribution,
        title: "Class distribution after cleaning".to_string(),
        x_label: "attack category".to_string(),
        y_label: "fraction of rows".to_string(),
        labels: dist.iter().map(|(n, _)| n.clone()).collect(),
        series: vec![Series {
            name: "share".to_string(),
            values: dist.iter().map(|(_, v)| *v).collect(),
        }],
    }
}

/// Standalone sweep output for the explain subcommand: report.json,
/// report.csv, and report.svg in `dir`.
pub fn write_sensitivity_files(dir: &Path, report: &SensitivityReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    let json_path = dir.join("report.json");
    std::fs::write(
        &json_path,
        json::canonical(&serde_json::to_value(report)?),
    )
    .map_err(|e| Error::write(&json_path, e))?;

    let mut rows = vec![vec![
        "group".to_string(),
        "baseline_accuracy".to_string(),
        "occluded_accuracy".to_string(),
        "degradation".to_string(),
    ]];
    for e in &report.ranking {
        rows.push(vec![
            e.group.clone(),
            fmt(report.baseline_accuracy),
            fmt(e.occluded_accuracy),
            fmt(e.degradation),
        ]);
    }
    let csv_path = dir.join("report.csv");
    std::fs::write(&csv_path, csv_string(&rows)?).map_err(|e| Error::write(&csv_path, e))?;

    let fig = FigureSpec {
        kind: FigureKind::Bar,
        title: format!("Occlusion sensitivity ({})", report.model),
        x_label: "feature group".to_string(),
        y_label: "accuracy degradation".to_string(),
        labels: report.ranking.iter().map(|e| e.group.clone()).collect(),
        series: vec![Series {
            name: report.model.name().to_string(),
            values: report.ranking.iter().map(|e| e.degradation).collect(),
        }],
    };
    let svg_path = dir.join("report.svg");
    std::fs::write(&svg_path, render_svg(&fig)?).map_err(|e| Error::write(&svg_path, e))?;
    Ok(())
}
