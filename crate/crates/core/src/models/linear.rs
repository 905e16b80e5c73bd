//! The three linear kinds: least-squares regression used as a classifier,
//! logistic regression, and a hinge-loss SVM trained with the 1/(lambda*t)
//! SGD schedule. Multi-class problems are handled one-vs-rest with an argmax
//! over per-class scores.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fraction_correct, run_epochs, ModelKind, ModelParams, StopReason, TrainConfig};

/// One weight row per score output (one for binary, one per class otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn n_outputs(class_count: usize) -> usize {
    if class_count == 2 {
        1
    } else {
        class_count
    }
}

/// Raw scores, rows x outputs.
fn scores(p: &LinearParams, x: ArrayView2<f64>) -> Array2<f64> {
    let mut s = x.dot(&p.weights.t());
    for mut row in s.rows_mut() {
        row += &p.bias;
    }
    s
}

fn classify(kind: ModelKind, s: &Array2<f64>) -> Vec<usize> {
    if s.ncols() == 1 {
        // Regression scores threshold at 0.5; logistic probability >= 0.5 and
        // hinge score >= 0 are the same cut at raw score 0.
        let cut = match kind {
            ModelKind::LinearRegression => 0.5,
            _ => 0.0,
        };
        s.column(0).iter().map(|&v| (v >= cut) as usize).collect()
    } else {
        s.rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

pub(super) fn predict(p: &LinearParams, kind: ModelKind, x: ArrayView2<f64>) -> Vec<usize> {
    classify(kind, &scores(p, x))
}

/// {0,1} targets per output column.
fn indicator_targets(y: &[usize], n_out: usize) -> Array2<f64> {
    let mut t = Array2::zeros((y.len(), n_out));
    for (r, &label) in y.iter().enumerate() {
        if n_out == 1 {
            t[[r, 0]] = label as f64;
        } else {
            t[[r, label]] = 1.0;
        }
    }
    t
}

pub(super) fn train(
    x: ArrayView2<f64>,
    y: &[usize],
    class_count: usize,
    cfg: &TrainConfig,
) -> (ModelParams, usize, StopReason) {
    let n_out = n_outputs(class_count);
    let mut params = LinearParams {
        weights: Array2::zeros((n_out, x.ncols())),
        bias: Array1::zeros(n_out),
    };
    let (epochs, reason) = match cfg.kind {
        ModelKind::LinearRegression | ModelKind::LogisticRegression => {
            gradient_descent(&mut params, x, y, cfg)
        }
        ModelKind::LinearSvm => pegasos(&mut params, x, y, cfg),
        other => unreachable!("not a linear kind: {other}"),
    };
    (ModelParams::Linear(params), epochs, reason)
}

/// Per-sample gradient descent on squared error (regression) or logistic
/// loss, one full seeded-shuffle pass per epoch. Per-sample steps keep the
/// early epochs productive enough for the plateau stopping rule.
fn gradient_descent(
    params: &mut LinearParams,
    x: ArrayView2<f64>,
    y: &[usize],
    cfg: &TrainConfig,
) -> (usize, StopReason) {
    let targets = indicator_targets(y, params.weights.nrows());
    let n_out = params.weights.nrows();
    let logistic = cfg.kind == ModelKind::LogisticRegression;
    let lr = cfg.learning_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    run_epochs(cfg.max_epochs, cfg.target_accuracy, cfg.min_improvement, |_| {
        order.shuffle(&mut rng);
        for &i in &order {
            let row = x.row(i);
            for k in 0..n_out {
                let mut s = params.weights.row(k).dot(&row) + params.bias[k];
                if logistic {
                    s = sigmoid(s);
                }
                let residual = s - targets[[i, k]];
                params
                    .weights
                    .row_mut(k)
                    .scaled_add(-lr * residual, &row);
                params.bias[k] -= lr * residual;
            }
        }
        fraction_correct(&predict(params, cfg.kind, x), y)
    })
}

/// Hinge-loss SGD with step 1/(lambda * t); t counts updates across epochs
/// and the bias is not regularized.
fn pegasos(
    params: &mut LinearParams,
    x: ArrayView2<f64>,
    y: &[usize],
    cfg: &TrainConfig,
) -> (usize, StopReason) {
    let n_out = params.weights.nrows();
    let lambda = cfg.svm_lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut t = 0u64;
    run_epochs(cfg.max_epochs, cfg.target_accuracy, cfg.min_improvement, |_| {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            for k in 0..n_out {
                let sign = if n_out == 1 {
                    if y[i] == 1 { 1.0 } else { -1.0 }
                } else if y[i] == k {
                    1.0
                } else {
                    -1.0
                };
                let margin = sign * (params.weights.row(k).dot(&row) + params.bias[k]);
                let mut w_k = params.weights.row_mut(k);
                w_k *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    w_k.scaled_add(eta * sign, &row);
                    params.bias[k] += eta * sign;
                }
            }
        }
        fraction_correct(&predict(params, ModelKind::LinearSvm, x), y)
    })
}
