//! Gradient-boosted decision trees for binary classification.
//!
//! Features are quantised into at most 255 quantile bins; each boosting round
//! fits one tree leaf-wise to the logistic-loss gradients using gradient and
//! hessian histograms. There is no row or feature subsampling, so training is
//! fully deterministic.

mod binning;
mod split;
mod tree;

pub use binning::{BinnedMatrix, BinningTable, MAX_BINS};
pub use split::{gain_improves, split_gain, BinStats, LeafHistogram, SplitCandidate, SplitParams, GAIN_TIE_RTOL};
pub use tree::{grow_tree, GrowParams, Grown, Node, SplitRecord, Tree};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::sigmoid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtHyper {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2_leaf: f64,
    pub max_bins: usize,
}

impl Default for GbdtHyper {
    fn default() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            max_leaves: 31,
            min_samples_leaf: 20,
            l2_leaf: 1.0,
            max_bins: 255,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Log-odds of the training prevalence.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub bins: BinningTable,
    pub hyper: GbdtHyper,
    pub seed: u64,
}

/// Per-round diagnostics collected during training.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    /// Mean logistic loss before the first round and after each round.
    pub losses: Vec<f64>,
    pub splits: Vec<SplitRecord>,
}

fn mean_log_loss(scores: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, y)| {
            // log(1 + e^s) - y s
            let sp = if *s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
            sp - f64::from(*y) * s
        })
        .sum();
    total / scores.len() as f64
}

pub fn train_gbdt(features: &FeatureMatrix, labels: &[u8], hyper: GbdtHyper, seed: u64) -> Result<BoostedModel> {
    train_gbdt_traced(features, labels, hyper, seed, false).map(|(m, _)| m)
}

/// Trains and returns the per-round trace; with `record_rows` every split
/// record also carries the row set of the leaf it split.
pub fn train_gbdt_traced(
    features: &FeatureMatrix,
    labels: &[u8],
    hyper: GbdtHyper,
    seed: u64,
    record_rows: bool,
) -> Result<(BoostedModel, TrainTrace)> {
    let n = features.n_rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if hyper.max_leaves < 1 || !(hyper.learning_rate > 0.0) || hyper.l2_leaf < 0.0 {
        return Err(Error::Config(format!("invalid boosting hyperparameters {hyper:?}")));
    }
    let bins = BinningTable::fit(features, hyper.max_bins)?;
    let positives = labels.iter().filter(|y| **y == 1).count();
    let mut trace = TrainTrace::default();

    if positives == 0 || positives == n {
        warn!("single-class training set ({positives}/{n} positive); returning base-score-only model");
        let p = positives as f64 / n as f64;
        let base_score = (p / (1.0 - p)).ln().clamp(-10.0, 10.0);
        return Ok((
            BoostedModel {
                base_score,
                trees: Vec::new(),
                bins,
                hyper,
                seed,
            },
            trace,
        ));
    }

    let binned = bins.bin_matrix(features)?;
    let prevalence = positives as f64 / n as f64;
    let base_score = (prevalence / (1.0 - prevalence)).ln();
    let mut scores = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let params = GrowParams {
        split: SplitParams {
            l2: hyper.l2_leaf,
            min_samples_leaf: hyper.min_samples_leaf,
        },
        max_leaves: hyper.max_leaves,
        learning_rate: hyper.learning_rate,
    };
    trace.losses.push(mean_log_loss(&scores, labels));

    let mut trees = Vec::with_capacity(hyper.n_trees);
    for round in 0..hyper.n_trees {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - f64::from(labels[i]);
            hess[i] = p * (1.0 - p);
        }
        let grown = grow_tree(&binned, &bins, &grad, &hess, &params, |node, split, rows| {
            trace.splits.push(SplitRecord {
                tree: round,
                node,
                feature: split.feature,
                bin: split.bin,
                gain: split.gain,
                rows: record_rows.then(|| rows.to_vec()),
            });
        });
        for (value, rows) in &grown.leaves {
            for &r in rows {
                scores[r as usize] += value;
            }
        }
        trees.push(grown.tree);
        trace.losses.push(mean_log_loss(&scores, labels));
    }

    Ok((
        BoostedModel {
            base_score,
            trees,
            bins,
            hyper,
            seed,
        },
        trace,
    ))
}

impl BoostedModel {
    pub fn n_features(&self) -> usize {
        self.bins.n_features()
    }

    /// Raw additive score (log-odds) for one feature row.
    pub fn raw_score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: features.len(),
            });
        }
        let mut s = self.base_score;
        for t in &self.trees {
            s += t.predict(features);
        }
        Ok(s)
    }

    /// Probability of RFI and the label at the 0.5 cut (`p >= 0.5` is positive).
    pub fn predict(&self, features: &[f64]) -> Result<(f64, u8)> {
        let p = sigmoid(self.raw_score(features)?);
        Ok((p, u8::from(p >= 0.5)))
    }
}
