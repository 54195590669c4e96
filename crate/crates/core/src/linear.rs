//! L2-regularised logistic regression trained by full-batch gradient descent
//! with backtracking line search.
//!
//! Objective: `L(w, b) = mean_i CE(y_i, σ(w·x_i + b)) + (l2 / 2) ‖w‖²`.
//! The bias is not penalised. Weights start at zero, so training is a pure
//! function of the data and hyperparameters.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::sigmoid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    pub l2: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            max_iters: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_loss: f64,
    pub seed: u64,
    /// Set when training data held a single class.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub hyper: LinearHyper,
    pub meta: TrainingMeta,
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularised objective and its gradient on a fixed training set.
pub struct LogisticObjective<'a> {
    features: &'a FeatureMatrix,
    targets: Vec<f64>,
    l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(features: &'a FeatureMatrix, labels: &[u8], l2: f64) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                found: labels.len(),
            });
        }
        Ok(Self {
            features,
            targets: labels.iter().map(|y| f64::from(*y)).collect(),
            l2,
        })
    }

    fn margins(&self, weights: &[f64], bias: f64) -> Vec<f64> {
        self.features
            .rows()
            .map(|x| bias + x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn loss(&self, weights: &[f64], bias: f64) -> f64 {
        let n = self.targets.len() as f64;
        let data: f64 = self
            .margins(weights, bias)
            .iter()
            .zip(&self.targets)
            .map(|(z, y)| softplus(*z) - y * z)
            .sum();
        data / n + 0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Gradient with respect to `(weights, bias)`.
    pub fn gradient(&self, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
        let n = self.targets.len() as f64;
        let mut gw: Vec<f64> = weights.iter().map(|w| self.l2 * w).collect();
        let mut gb = 0.0;
        for ((x, z), y) in self.features.rows().zip(self.margins(weights, bias)).zip(&self.targets) {
            let r = (sigmoid(z) - y) / n;
            gb += r;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += r * xi;
            }
        }
        (gw, gb)
    }
}

fn inf_norm(gw: &[f64], gb: f64) -> f64 {
    gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()))
}

/// Fits the model; `loss_trace`, when given, receives the loss after each accepted step
/// (preceded by the initial loss).
pub fn train_logistic_traced(
    features: &FeatureMatrix,
    labels: &[u8],
    hyper: LinearHyper,
    seed: u64,
    mut loss_trace: Option<&mut Vec<f64>>,
) -> Result<LinearModel> {
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::InsufficientRows { needed: 2, got: n });
    }
    let objective = LogisticObjective::new(features, labels, hyper.l2)?;
    let d = features.n_cols();
    let positives = labels.iter().filter(|y| **y == 1).count();

    if positives == 0 || positives == n {
        let prevalence = positives as f64 / n as f64;
        let bias = (prevalence / (1.0 - prevalence)).ln().clamp(-10.0, 10.0);
        warn!("single-class training set ({positives}/{n} positive); returning bias-only model");
        return Ok(LinearModel {
            weights: vec![0.0; d],
            bias,
            threshold: 0.5,
            hyper,
            meta: TrainingMeta {
                seed,
                degenerate: true,
                final_loss: objective.loss(&vec![0.0; d], bias),
                ..TrainingMeta::default()
            },
        });
    }

    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut loss = objective.loss(&w, b);
    let (mut gw, mut gb) = objective.gradient(&w, b);
    let mut step = 1.0;
    let mut iterations = 0;
    if let Some(t) = loss_trace.as_deref_mut() {
        t.push(loss);
    }

    while iterations < hyper.max_iters && inf_norm(&gw, gb) > hyper.tol {
        let sq_norm = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let cand_b = b - step * gb;
            let cand_loss = objective.loss(&cand_w, cand_b);
            if cand_loss <= loss - ARMIJO * step * sq_norm {
                w = cand_w;
                b = cand_b;
                loss = cand_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        if let Some(t) = loss_trace.as_deref_mut() {
            t.push(loss);
        }
        (gw, gb) = objective.gradient(&w, b);
        step *= 2.0;
    }

    Ok(LinearModel {
        weights: w,
        bias: b,
        threshold: 0.5,
        hyper,
        meta: TrainingMeta {
            iterations,
            final_grad_norm: inf_norm(&gw, gb),
            final_loss: loss,
            seed,
            degenerate: false,
        },
    })
}

pub fn train_logistic(features: &FeatureMatrix, labels: &[u8], hyper: LinearHyper, seed: u64) -> Result<LinearModel> {
    train_logistic_traced(features, labels, hyper, seed, None)
}

impl LinearModel {
    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Config(format!("threshold {threshold} must lie in (0, 1)")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn margin(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: features.len(),
            });
        }
        Ok(self.bias + features.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
    }

    /// Probability of RFI and the thresholded label (`p >= threshold` is positive).
    pub fn predict(&self, features: &[f64]) -> Result<(f64, u8)> {
        let p = sigmoid(self.margin(features)?);
        Ok((p, u8::from(p >= self.threshold)))
    }
}
