//! Bootstrap-aggregated Gini trees with sqrt(m) feature sampling per split.
//! Each tree owns a seed-derived RNG substream, so results do not depend on
//! build scheduling; prediction is a majority vote with ties broken toward
//! the lower class index.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, TreeNode, TreeParams};
use super::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: Vec<TreeParams>,
}

pub(super) fn fit(
    x: ArrayView2<f64>,
    y: &[usize],
    class_count: usize,
    cfg: &TrainConfig,
) -> ForestParams {
    let n = x.nrows();
    let feature_sample = if cfg.forest_feature_subsample {
        Some(((x.ncols() as f64).sqrt().floor() as usize).max(1))
    } else {
        None
    };
    let mut seeder = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tree_seeds: Vec<u64> = (0..cfg.forest_trees).map(|_| seeder.random()).collect();

    let build = |&tree_seed: &u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
        let rows: Vec<usize> = if cfg.forest_bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        tree::grow_on_rows(x, y, class_count, rows, feature_sample, &mut Some(&mut rng))
    };

    let trees: Vec<TreeParams> = if cfg.parallel {
        tree_seeds.par_iter().map(build).collect()
    } else {
        tree_seeds.iter().map(build).collect()
    };
    ForestParams { trees }
}

fn vote_row(p: &ForestParams, x: ArrayView2<f64>, r: usize, votes: &mut Vec<usize>) -> usize {
    votes.clear();
    for tree in &p.trees {
        let mut at = 0;
        let class = loop {
            match &tree.nodes[at] {
                TreeNode::Leaf { class } => break *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[[r, *feature]] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        };
        if class >= votes.len() {
            votes.resize(class + 1, 0);
        }
        votes[class] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    best
}

pub(super) fn predict(p: &ForestParams, x: ArrayView2<f64>, parallel: bool) -> Vec<usize> {
    if parallel {
        (0..x.nrows())
            .into_par_iter()
            .map_init(Vec::new, |votes, r| vote_row(p, x, r, votes))
            .collect()
    } else {
        let mut votes = Vec::new();
        (0..x.nrows()).map(|r| vote_row(p, x, r, &mut votes)).collect()
    }
}
