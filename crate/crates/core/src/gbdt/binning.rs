use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const MAX_BINS: usize = 255;

/// Per-feature inclusive upper bin edges. A value `v` falls in the first bin
/// whose edge is `>= v`; values above the last edge fall in the last bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningTable {
    pub edges: Vec<Vec<f64>>,
}

/// Training matrix converted to bin indices, stored column-major.
#[derive(Clone, Debug)]
pub struct BinnedMatrix {
    pub columns: Vec<Vec<u8>>,
    pub n_rows: usize,
}

impl BinnedMatrix {
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

fn quantile_edges(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct;
    }
    let n = values.len();
    let mut edges: Vec<f64> = Vec::with_capacity(max_bins);
    for k in 1..=max_bins {
        let idx = (k * n).div_ceil(max_bins) - 1;
        let edge = values[idx];
        if edges.last().is_none_or(|last| edge > *last) {
            edges.push(edge);
        }
    }
    edges
}

impl BinningTable {
    pub fn fit(features: &FeatureMatrix, max_bins: usize) -> Result<Self> {
        if features.n_rows() < 2 {
            return Err(Error::InsufficientRows {
                needed: 2,
                got: features.n_rows(),
            });
        }
        if !(1..=MAX_BINS).contains(&max_bins) {
            return Err(Error::Config(format!("max_bins must be in 1..={MAX_BINS}, got {max_bins}")));
        }
        let edges = (0..features.n_cols())
            .map(|j| quantile_edges(features.column(j), max_bins))
            .collect();
        Ok(Self { edges })
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len()
    }

    pub fn bin(&self, feature: usize, value: f64) -> u8 {
        let edges = &self.edges[feature];
        let idx = edges.partition_point(|e| *e < value);
        idx.min(edges.len() - 1) as u8
    }

    pub fn bin_matrix(&self, features: &FeatureMatrix) -> Result<BinnedMatrix> {
        if features.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: features.n_cols(),
            });
        }
        let columns = (0..self.n_features())
            .map(|j| features.rows().map(|row| self.bin(j, row[j])).collect())
            .collect();
        Ok(BinnedMatrix {
            columns,
            n_rows: features.n_rows(),
        })
    }
}
