//! K-nearest-neighbors with Euclidean distance. Distance ties break toward
//! the lower training-row index, vote ties toward the lower class index.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub k: usize,
}

pub(super) fn fit(x: ArrayView2<f64>, y: &[usize], k: usize) -> KnnParams {
    KnnParams {
        x: x.to_owned(),
        y: y.to_vec(),
        k: k.max(1).min(y.len()),
    }
}

fn predict_row(p: &KnnParams, row: &[f64], dists: &mut Vec<(f64, usize)>) -> usize {
    let n_feat = row.len();
    dists.clear();
    let train = p.x.as_slice().expect("training matrix is contiguous");
    for (i, chunk) in train.chunks_exact(n_feat).enumerate() {
        let mut d = 0.0;
        for (a, b) in chunk.iter().zip(row) {
            let diff = a - b;
            d += diff * diff;
        }
        dists.push((d, i));
    }
    let k = p.k;
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
    }
    let mut votes = vec![0usize; p.y.iter().max().map_or(1, |&m| m + 1)];
    for &(_, i) in dists[..k].iter() {
        votes[p.y[i]] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    best
}

pub(super) fn predict(p: &KnnParams, x: ArrayView2<f64>, parallel: bool) -> Vec<usize> {
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    if parallel {
        rows.par_iter()
            .map_init(Vec::new, |buf, row| predict_row(p, row, buf))
            .collect()
    } else {
        let mut buf = Vec::new();
        rows.iter().map(|row| predict_row(p, row, &mut buf)).collect()
    }
}
