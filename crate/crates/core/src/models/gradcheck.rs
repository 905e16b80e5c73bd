//! Central finite-difference verification of the analytic training
//! gradients. The relative error uses `|a - n| / max(|a| + |n|, 1e-6)` so
//! that coordinates with a true zero gradient do not amplify rounding noise.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::MlpParams;
use super::ModelKind;

const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub draws: usize,
    pub coordinates: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

fn central_difference(mut loss: impl FnMut(f64) -> f64, at: f64) -> f64 {
    (loss(at + FD_STEP) - loss(at - FD_STEP)) / (2.0 * FD_STEP)
}

/// Logistic loss of one sample: `-[y ln s + (1-y) ln(1-s)]`, s = sigmoid(w.x + b).
pub fn logistic_loss(w: &[f64], b: f64, x: &[f64], y: f64) -> f64 {
    let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
    let s = 1.0 / (1.0 + (-z).exp());
    -(y * s.max(1e-12).ln() + (1.0 - y) * (1.0 - s).max(1e-12).ln())
}

/// Analytic gradient of [`logistic_loss`]: `(s - y) * x` and `(s - y)`.
pub fn logistic_grad(w: &[f64], b: f64, x: &[f64], y: f64) -> (Vec<f64>, f64) {
    let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
    let s = 1.0 / (1.0 + (-z).exp());
    ((0..x.len()).map(|j| (s - y) * x[j]).collect(), s - y)
}

/// Per-sample SVM objective `lambda/2 |w|^2 + max(0, 1 - y(w.x + b))`.
pub fn svm_objective(w: &[f64], b: f64, x: &[f64], y: f64, lambda: f64) -> f64 {
    let margin = y * (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b);
    let reg: f64 = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    reg + (1.0 - margin).max(0.0)
}

/// Subgradient of [`svm_objective`], exact away from margin == 1.
pub fn svm_grad(w: &[f64], b: f64, x: &[f64], y: f64, lambda: f64) -> (Vec<f64>, f64) {
    let margin = y * (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b);
    let violated = margin < 1.0;
    let gw = (0..x.len())
        .map(|j| lambda * w[j] - if violated { y * x[j] } else { 0.0 })
        .collect();
    let gb = if violated { -y } else { 0.0 };
    (gw, gb)
}

/// Compares analytic gradients to central finite differences over `draws`
/// random parameter/sample states and returns the worst relative error.
pub fn grad_check(kind: ModelKind, draws: usize, seed: u64) -> GradCheckReport {
    match kind {
        ModelKind::LogisticRegression => check_logistic(draws, seed),
        ModelKind::LinearSvm => check_svm(draws, seed),
        ModelKind::Mlp => check_mlp(draws, seed),
        other => panic!("gradient check is defined for smooth-loss kinds, not {other}"),
    }
}

fn check_logistic(draws: usize, seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 6;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for _ in 0..draws {
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = rng.random_range(0..2) as f64;
        let (gw, gb) = logistic_grad(&w, b, &x, y);
        for j in 0..dim {
            let mut w2 = w.clone();
            let n = central_difference(
                |v| {
                    w2[j] = v;
                    logistic_loss(&w2, b, &x, y)
                },
                w[j],
            );
            worst = worst.max(relative_error(gw[j], n));
            coords += 1;
        }
        let n = central_difference(|v| logistic_loss(&w, v, &x, y), b);
        worst = worst.max(relative_error(gb, n));
        coords += 1;
    }
    GradCheckReport {
        max_rel_error: worst,
        draws,
        coordinates: coords,
    }
}

fn check_svm(draws: usize, seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 6;
    let lambda = 1e-4;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    let mut done = 0;
    while done < draws {
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let margin = y * (w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b);
        // The hinge kink at margin == 1 is not differentiable; keep clear of it.
        if (margin - 1.0).abs() < 0.05 {
            continue;
        }
        done += 1;
        let (gw, gb) = svm_grad(&w, b, &x, y, lambda);
        for j in 0..dim {
            let mut w2 = w.clone();
            let n = central_difference(
                |v| {
                    w2[j] = v;
                    svm_objective(&w2, b, &x, y, lambda)
                },
                w[j],
            );
            worst = worst.max(relative_error(gw[j], n));
            coords += 1;
        }
        let n = central_difference(|v| svm_objective(&w, v, &x, y, lambda), b);
        worst = worst.max(relative_error(gb, n));
        coords += 1;
    }
    GradCheckReport {
        max_rel_error: worst,
        draws,
        coordinates: coords,
    }
}

fn check_mlp(draws: usize, seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dim, hidden) = (5, 100);
    let l2 = 1e-4;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for d in 0..draws {
        // Alternate binary and 3-class output heads.
        let n_out = if d % 2 == 0 { 1 } else { 3 };
        let params = MlpParams::random(dim, hidden, n_out, rng.random());
        let x: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.random_range(0.0..1.0));
        let y = if n_out == 1 {
            rng.random_range(0..2)
        } else {
            rng.random_range(0..3)
        };
        let xb: Array2<f64> = x.clone().insert_axis(Axis(0));
        let analytic = params.gradient_flat(xb.view(), &[y], l2);
        let flat = params.flat();

        // Probing every one of the ~700 coordinates per draw is wasteful;
        // check a deterministic spread instead.
        let stride = (flat.len() / 40).max(1);
        let mut scratch = params.clone();
        for j in (0..flat.len()).step_by(stride) {
            let mut probe = flat.clone();
            let n = central_difference(
                |v| {
                    probe[j] = v;
                    scratch.set_flat(&probe);
                    super::mlp::sample_loss(&scratch, x.view(), y, l2)
                },
                flat[j],
            );
            worst = worst.max(relative_error(analytic[j], n));
            coords += 1;
        }
    }
    GradCheckReport {
        max_rel_error: worst,
        draws,
        coordinates: coords,
    }
}
