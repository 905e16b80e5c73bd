//! Seeded synthetic flow-record generator, a desk-scale surrogate for the
//! real dataset.
//!
//! Informative columns are bimodal (a "low" band around 0.15 and a "high"
//! band around 0.85). Each row draws a latent class, and each informative
//! column lands in the class's band except with probability
//! `feature_flip_prob`, which controls how redundant the informative columns
//! are with one another. The binary label is a pure threshold rule on the sum
//! of the informative columns (strictly more than half of them high), plus a
//! small seeded label flip. Noise columns are uniform and independent of the
//! label.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, RawTable};

const LOW_CENTER: f64 = 0.15;
const HIGH_CENTER: f64 = 0.85;
const JITTER: f64 = 0.10;
const CATEGORY_LEVELS: [&str; 3] = ["alpha", "beta", "gamma"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    pub n_categorical: usize,
    pub seed: u64,
    /// Probability that an informative column disagrees with the latent
    /// class. Small values make the informative columns redundant copies of
    /// one another; the default keeps them individually informative.
    pub feature_flip_prob: f64,
    /// Fraction of labels flipped after the threshold rule (kept <= 0.02).
    pub label_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 10_000,
            n_informative: 3,
            n_noise: 12,
            n_categorical: 0,
            seed: 42,
            feature_flip_prob: 0.15,
            label_noise: 0.01,
        }
    }
}

impl SyntheticSpec {
    pub fn new(
        n_rows: usize,
        n_informative: usize,
        n_noise: usize,
        n_categorical: usize,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            n_rows,
            n_informative,
            n_noise,
            n_categorical,
            seed,
            ..SyntheticSpec::default()
        }
    }

    /// Makes the informative columns near-identical copies, for studying how
    /// models reroute around masked features.
    pub fn redundant(mut self) -> Self {
        self.feature_flip_prob = 0.02;
        self
    }

    /// Sum threshold of the label rule: strictly more than half of the
    /// informative columns in the high band.
    pub fn label_threshold(&self) -> f64 {
        let m = self.n_informative as f64;
        let pivot = (self.n_informative / 2) as f64 + 0.5;
        LOW_CENTER * m + (HIGH_CENTER - LOW_CENTER) * pivot
    }

    /// Column names, in table order.
    pub fn informative_names(&self) -> Vec<String> {
        (0..self.n_informative)
            .map(|i| {
                if i == 0 {
                    "flow_ttl".to_string()
                } else {
                    format!("sig_{i}")
                }
            })
            .collect()
    }

    pub fn generate(&self) -> RawTable {
        assert!(self.n_informative >= 1, "need at least one informative column");
        assert!(
            (0.0..=0.02).contains(&self.label_noise),
            "label noise must stay within 2%"
        );

        let mut names = self.informative_names();
        names.extend((0..self.n_noise).map(|j| format!("noise_{j}")));
        names.extend((0..self.n_categorical).map(|k| format!("cat_{k}")));
        names.push("attack_cat".to_string());
        names.push("label".to_string());

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let threshold = self.label_threshold();
        let mut rows = Vec::with_capacity(self.n_rows);
        for _ in 0..self.n_rows {
            let mut row = Vec::with_capacity(names.len());
            let latent_high: bool = rng.random_bool(0.5);
            let mut sum = 0.0;
            for _ in 0..self.n_informative {
                let high = latent_high != rng.random_bool(self.feature_flip_prob);
                let center = if high { HIGH_CENTER } else { LOW_CENTER };
                let v = center + rng.random_range(-JITTER..JITTER);
                sum += v;
                row.push(Cell::Num(v));
            }
            for _ in 0..self.n_noise {
                row.push(Cell::Num(rng.random_range(0.0..1.0)));
            }
            for _ in 0..self.n_categorical {
                let level = CATEGORY_LEVELS[rng.random_range(0..CATEGORY_LEVELS.len())];
                row.push(Cell::Text(level.to_string()));
            }
            let mut label = sum > threshold;
            if self.label_noise > 0.0 && rng.random_bool(self.label_noise) {
                label = !label;
            }
            let category = if !label {
                "normal"
            } else if matches!(row[0], Cell::Num(v) if v > 0.5) {
                "flood"
            } else {
                "probe"
            };
            row.push(Cell::Text(category.to_string()));
            row.push(Cell::Num(label as u8 as f64));
            rows.push(row);
        }

        RawTable::new(names, rows).expect("generated table is rectangular")
    }
}

/// Generates a surrogate table with the default band/noise profile.
pub fn make_synthetic(
    n_rows: usize,
    n_informative: usize,
    n_noise: usize,
    n_categorical: usize,
    seed: u64,
) -> RawTable {
    SyntheticSpec::new(n_rows, n_informative, n_noise, n_categorical, seed).generate()
}
