//! CART-style classification tree: Gini impurity, midpoint thresholds, no
//! depth limit. A node splits whenever it is impure and any feature still has
//! two distinct values; equal-gain candidates resolve to the lowest feature
//! index, then the lowest threshold. Rows with `value <= threshold` go left.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum TreeNode {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub nodes: Vec<TreeNode>,
}

pub(super) fn fit(x: ArrayView2<f64>, y: &[usize], class_count: usize) -> TreeParams {
    grow(x, y, class_count, None, &mut None)
}

/// Grows a tree over `x`/`y`; `feature_sample` draws that many candidate
/// features per split from the provided rng (used by the forest).
pub(super) fn grow(
    x: ArrayView2<f64>,
    y: &[usize],
    class_count: usize,
    feature_sample: Option<usize>,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> TreeParams {
    grow_on_rows(x, y, class_count, (0..x.nrows()).collect(), feature_sample, rng)
}

pub(super) fn grow_on_rows(
    x: ArrayView2<f64>,
    y: &[usize],
    class_count: usize,
    rows: Vec<usize>,
    feature_sample: Option<usize>,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> TreeParams {
    let mut nodes: Vec<TreeNode> = Vec::new();
    // Explicit work stack instead of recursion; trees can get deep on noisy
    // labels. Each entry fills the node slot it names.
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    nodes.push(TreeNode::Leaf { class: 0 });
    stack.push((0, rows));

    while let Some((slot, rows)) = stack.pop() {
        let counts = class_counts(y, &rows, class_count);
        let majority = argmax_count(&counts);
        if counts.iter().filter(|&&c| c > 0).count() <= 1 {
            nodes[slot] = TreeNode::Leaf { class: majority };
            continue;
        }
        let candidates = candidate_features(x.ncols(), feature_sample, rng);
        match best_split(x, y, &rows, &counts, &candidates, class_count) {
            None => nodes[slot] = TreeNode::Leaf { class: majority },
            Some((feature, threshold)) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&r| x[[r, feature]] <= threshold);
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { class: 0 });
                let right = nodes.len();
                nodes.push(TreeNode::Leaf { class: 0 });
                nodes[slot] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                stack.push((left, left_rows));
                stack.push((right, right_rows));
            }
        }
    }
    TreeParams { nodes }
}

fn class_counts(y: &[usize], rows: &[usize], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0usize; class_count];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

fn gini(counts: &[usize], total: f64) -> f64 {
    let mut g = 1.0;
    for &c in counts {
        let p = c as f64 / total;
        g -= p * p;
    }
    g
}

/// Candidate features in ascending order so equal gains resolve to the
/// lowest feature index.
fn candidate_features(
    n_features: usize,
    feature_sample: Option<usize>,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Vec<usize> {
    match (feature_sample, rng) {
        (Some(k), Some(rng)) if k < n_features => {
            let mut picked = sample(*rng, n_features, k).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..n_features).collect(),
    }
}

/// Best (feature, midpoint threshold) by Gini gain, or None when every
/// candidate feature is constant within the node. Zero-gain splits are
/// accepted; they still shrink the node and let structure like XOR resolve
/// deeper down.
fn best_split(
    x: ArrayView2<f64>,
    y: &[usize],
    rows: &[usize],
    parent_counts: &[usize],
    candidates: &[usize],
    class_count: usize,
) -> Option<(usize, f64)> {
    let n = rows.len() as f64;
    let parent_gini = gini(parent_counts, n);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &feature in candidates {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (x[[r, feature]], y[r])));
        sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left = vec![0usize; class_count];
        let mut right = parent_counts.to_vec();
        for i in 0..sorted.len() - 1 {
            left[sorted[i].1] += 1;
            right[sorted[i].1] -= 1;
            let (v, next) = (sorted[i].0, sorted[i + 1].0);
            if v == next {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = n - nl;
            let weighted = (nl * gini(&left, nl) + nr * gini(&right, nr)) / n;
            let gain = parent_gini - weighted;
            let threshold = (v + next) / 2.0;
            if best.map_or(true, |(g, _, _)| gain > g) {
                best = Some((gain, feature, threshold));
            }
        }
    }
    best.map(|(_, feature, threshold)| (feature, threshold))
}

fn predict_row(p: &TreeParams, row: &dyn Fn(usize) -> f64) -> usize {
    let mut at = 0;
    loop {
        match &p.nodes[at] {
            TreeNode::Leaf { class } => return *class,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                at = if row(*feature) <= *threshold { *left } else { *right };
            }
        }
    }
}

pub(super) fn predict(p: &TreeParams, x: ArrayView2<f64>) -> Vec<usize> {
    (0..x.nrows())
        .map(|r| predict_row(p, &|f| x[[r, f]]))
        .collect()
}
