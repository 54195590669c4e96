//! Histogram accumulation and best-split search for one leaf.

use rayon::prelude::*;

use super::binning::BinnedMatrix;

/// Relative tolerance under which two gains are considered tied; the earlier
/// candidate in (feature, bin) order then wins.
pub const GAIN_TIE_RTOL: f64 = 1e-10;

/// `true` when `candidate` beats `incumbent` by more than the tie tolerance.
pub fn gain_improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + GAIN_TIE_RTOL * incumbent.abs()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BinStats {
    pub grad: f64,
    pub hess: f64,
    pub count: u32,
}

impl BinStats {
    fn add(&mut self, g: f64, h: f64) {
        self.grad += g;
        self.hess += h;
        self.count += 1;
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SplitParams {
    pub l2: f64,
    pub min_samples_leaf: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Rows with bin index `<= bin` go left.
    pub bin: usize,
    pub gain: f64,
    pub left: BinStats,
    pub right: BinStats,
}

/// `½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)]`.
pub fn split_gain(left: BinStats, right: BinStats, l2: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + l2);
    let g = left.grad + right.grad;
    let h = left.hess + right.hess;
    0.5 * (score(left.grad, left.hess) + score(right.grad, right.hess) - score(g, h))
}

/// Gradient/hessian histograms of one leaf, one per feature.
pub struct LeafHistogram {
    pub features: Vec<Vec<BinStats>>,
    pub total: BinStats,
}

impl LeafHistogram {
    /// Accumulates in ascending row order; `rows` must be sorted.
    pub fn build(binned: &BinnedMatrix, n_bins: &[usize], rows: &[u32], grad: &[f64], hess: &[f64]) -> Self {
        let features = binned
            .columns
            .par_iter()
            .zip(n_bins.par_iter())
            .map(|(column, nb)| {
                let mut hist = vec![BinStats::default(); *nb];
                for &r in rows {
                    let r = r as usize;
                    hist[column[r] as usize].add(grad[r], hess[r]);
                }
                hist
            })
            .collect();
        let mut total = BinStats::default();
        for &r in rows {
            total.add(grad[r as usize], hess[r as usize]);
        }
        Self { features, total }
    }

    /// Highest-gain split with positive gain, scanning features then bins in
    /// ascending order.
    pub fn best_split(&self, params: &SplitParams) -> Option<SplitCandidate> {
        let mut best: Option<SplitCandidate> = None;
        let total = self.total;
        if (total.count as usize) < 2 * params.min_samples_leaf.max(1) {
            return None;
        }
        for (feature, hist) in self.features.iter().enumerate() {
            let mut left = BinStats::default();
            for (bin, stats) in hist.iter().enumerate().take(hist.len().saturating_sub(1)) {
                left.grad += stats.grad;
                left.hess += stats.hess;
                left.count += stats.count;
                let right = BinStats {
                    grad: total.grad - left.grad,
                    hess: total.hess - left.hess,
                    count: total.count - left.count,
                };
                if (left.count as usize) < params.min_samples_leaf.max(1)
                    || (right.count as usize) < params.min_samples_leaf.max(1)
                {
                    continue;
                }
                let gain = split_gain(left, right, params.l2);
                if !(gain > 0.0) {
                    continue;
                }
                if best.is_none_or(|b| gain_improves(gain, b.gain)) {
                    best = Some(SplitCandidate {
                        feature,
                        bin,
                        gain,
                        left,
                        right,
                    });
                }
            }
        }
        best
    }
}
