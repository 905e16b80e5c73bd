//! Seven classifiers behind one train/predict interface.
//!
//! Iterative learners (the linear kinds and the MLP) share the stopping
//! criteria: after each epoch the training accuracy is evaluated, and
//! training stops once it reaches `target_accuracy`, improves by less than
//! `min_improvement` absolute points over the previous epoch, or hits
//! `max_epochs`. Tree, forest, and KNN train in one pass.

mod forest;
pub mod gradcheck;
mod knn;
mod linear;
mod mlp;
mod tree;

pub use forest::ForestParams;
pub use knn::KnnParams;
pub use linear::LinearParams;
pub use mlp::MlpParams;
pub use tree::{TreeNode, TreeParams};

use std::path::Path;
use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The classifier suite. Experiments iterate this exhaustive set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    LinearRegression,
    LogisticRegression,
    LinearSvm,
    Knn,
    DecisionTree,
    RandomForest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::LinearRegression,
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::Knn,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LinearRegression => "linear_regression",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::Knn => "knn",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_iterative(self) -> bool {
        matches!(
            self,
            ModelKind::LinearRegression
                | ModelKind::LogisticRegression
                | ModelKind::LinearSvm
                | ModelKind::Mlp
        )
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Why an iterative learner stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    Plateau,
    MaxEpochs,
    Noniterative,
}

/// Training configuration with the documented per-kind defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub seed: u64,
    pub target_accuracy: f64,
    /// Absolute accuracy points; an epoch improving less than this stops training.
    pub min_improvement: f64,
    pub max_epochs: usize,
    /// Full-batch gradient descent step for the regression kinds.
    pub learning_rate: f64,
    /// Hinge-loss regularization; the SGD step at update t is 1/(lambda * t).
    pub svm_lambda: f64,
    pub knn_k: usize,
    pub forest_trees: usize,
    pub forest_bootstrap: bool,
    /// Sample sqrt(m) candidate features per split instead of all m.
    pub forest_feature_subsample: bool,
    pub mlp_hidden: usize,
    pub mlp_learning_rate: f64,
    pub mlp_batch_size: usize,
    pub mlp_l2: f64,
    /// Allow internal parallelism (forest tree building). Timing harnesses
    /// turn this off.
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_true() -> bool {
    true
}

impl TrainConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let max_epochs = match kind {
            ModelKind::LinearRegression | ModelKind::LogisticRegression => 500,
            ModelKind::LinearSvm | ModelKind::Mlp => 200,
            _ => 1,
        };
        TrainConfig {
            kind,
            seed,
            target_accuracy: 0.90,
            min_improvement: 0.01,
            max_epochs,
            learning_rate: 0.1,
            svm_lambda: 1e-4,
            knn_k: 5,
            forest_trees: 100,
            forest_bootstrap: true,
            forest_feature_subsample: true,
            mlp_hidden: 100,
            mlp_learning_rate: 1e-3,
            mlp_batch_size: 200,
            mlp_l2: 1e-4,
            parallel: true,
        }
    }
}

/// Learned parameters, tagged for the versioned JSON model format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ModelParams {
    Linear(LinearParams),
    Knn(KnnParams),
    Tree(TreeParams),
    Forest(ForestParams),
    Mlp(MlpParams),
}

/// A trained classifier plus its training metadata. Prediction is a pure
/// function of the parameters and the input rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub class_count: usize,
    pub n_features: usize,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub train_secs: f64,
}

/// Trains one model. Labels must lie in `[0, class_count)` and features are
/// expected to be scaled to `[0, 1]`.
pub fn train(
    x: ArrayView2<f64>,
    y: &[usize],
    class_count: usize,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if class_count < 2 {
        return Err(Error::SingleClass);
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= class_count) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {class_count} classes"
        )));
    }
    if cfg.kind.is_iterative() {
        let first = y[0];
        if y.iter().all(|&l| l == first) {
            return Err(Error::SingleClass);
        }
    }

    let start = Instant::now();
    let (params, epochs_run, stop_reason) = match cfg.kind {
        ModelKind::LinearRegression | ModelKind::LogisticRegression | ModelKind::LinearSvm => {
            linear::train(x, y, class_count, cfg)
        }
        ModelKind::Knn => (
            ModelParams::Knn(knn::fit(x, y, cfg.knn_k)),
            1,
            StopReason::Noniterative,
        ),
        ModelKind::DecisionTree => (
            ModelParams::Tree(tree::fit(x, y, class_count)),
            1,
            StopReason::Noniterative,
        ),
        ModelKind::RandomForest => (
            ModelParams::Forest(forest::fit(x, y, class_count, cfg)),
            1,
            StopReason::Noniterative,
        ),
        ModelKind::Mlp => mlp::train(x, y, class_count, cfg),
    };

    Ok(TrainedModel {
        kind: cfg.kind,
        params,
        class_count,
        n_features: x.ncols(),
        epochs_run,
        stop_reason,
        train_secs: start.elapsed().as_secs_f64(),
    })
}

impl TrainedModel {
    /// Predicts a class index per row.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.predict_impl(x, true)
    }

    /// Single-threaded prediction, for comparable wall-clock timing.
    pub fn predict_serial(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.predict_impl(x, false)
    }

    fn predict_impl(&self, x: ArrayView2<f64>, parallel: bool) -> Result<Vec<usize>> {
        if x.ncols() != self.n_features {
            return Err(Error::FeatureCountMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(match &self.params {
            ModelParams::Linear(p) => linear::predict(p, self.kind, x),
            ModelParams::Knn(p) => knn::predict(p, x, parallel),
            ModelParams::Tree(p) => tree::predict(p, x),
            ModelParams::Forest(p) => forest::predict(p, x, parallel),
            ModelParams::Mlp(p) => mlp::predict(p, x),
        })
    }

    /// Writes the versioned JSON model document.
    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string_pretty(&doc)?;
        std::fs::write(path, json).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: SavedModel = serde_json::from_str(&text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: doc.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        Ok(doc.model)
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    model: TrainedModel,
}

/// Accuracy plus the class_count x class_count confusion matrix, indexed
/// `[truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

pub fn accuracy(pred: &[usize], truth: &[usize], class_count: usize) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty prediction vector".to_string()));
    }
    let mut confusion = vec![vec![0usize; class_count]; class_count];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= class_count || t >= class_count {
            return Err(Error::InvalidInput(format!(
                "label out of range for {class_count} classes"
            )));
        }
        confusion[t][p] += 1;
    }
    let correct: usize = (0..class_count).map(|i| confusion[i][i]).sum();
    Ok(Metrics {
        accuracy: correct as f64 / pred.len() as f64,
        confusion,
    })
}

/// Plain match fraction, used inside epoch loops.
pub(crate) fn fraction_correct(pred: &[usize], truth: &[usize]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Shared stopping-criteria loop. `epoch` runs one training epoch and
/// returns the training accuracy afterwards.
pub(crate) fn run_epochs(
    max_epochs: usize,
    target_accuracy: f64,
    min_improvement: f64,
    mut epoch: impl FnMut(usize) -> f64,
) -> (usize, StopReason) {
    let mut prev: Option<f64> = None;
    for e in 1..=max_epochs {
        let acc = epoch(e);
        if acc >= target_accuracy {
            return (e, StopReason::TargetReached);
        }
        if let Some(p) = prev {
            if acc - p < min_improvement {
                return (e, StopReason::Plateau);
            }
        }
        prev = Some(acc);
    }
    (max_epochs, StopReason::MaxEpochs)
}
