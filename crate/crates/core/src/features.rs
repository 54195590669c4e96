//! Per-channel summary statistics and train-set standardisation.
//!
//! Every flight maps to `NUM_CHANNELS × 10 = 370` values laid out channel-major:
//! index `channel * 10 + kind`. This layout is a stable contract shared with
//! the feature-matrix dump and the model files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recording::{channel_name, FlightRecording, Label, NUM_CHANNELS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Sum,
    Median,
    Mean,
    Length,
    StdDev,
    Variance,
    RootMeanSquare,
    Maximum,
    AbsoluteMaximum,
    Minimum,
}

pub const NUM_KINDS: usize = 10;
pub const NUM_FEATURES: usize = NUM_CHANNELS * NUM_KINDS;

impl FeatureKind {
    pub const ALL: [FeatureKind; NUM_KINDS] = [
        FeatureKind::Sum,
        FeatureKind::Median,
        FeatureKind::Mean,
        FeatureKind::Length,
        FeatureKind::StdDev,
        FeatureKind::Variance,
        FeatureKind::RootMeanSquare,
        FeatureKind::Maximum,
        FeatureKind::AbsoluteMaximum,
        FeatureKind::Minimum,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Sum => "sum",
            FeatureKind::Median => "median",
            FeatureKind::Mean => "mean",
            FeatureKind::Length => "length",
            FeatureKind::StdDev => "std",
            FeatureKind::Variance => "variance",
            FeatureKind::RootMeanSquare => "rms",
            FeatureKind::Maximum => "max",
            FeatureKind::AbsoluteMaximum => "abs_max",
            FeatureKind::Minimum => "min",
        }
    }
}

/// Position of `(channel, kind)` in a feature vector.
pub fn feature_index(channel: usize, kind: FeatureKind) -> usize {
    channel * NUM_KINDS + kind.index()
}

/// Human-readable name, e.g. `cno_07.min`.
pub fn feature_name(index: usize) -> String {
    format!("{}.{}", channel_name(index / NUM_KINDS), FeatureKind::ALL[index % NUM_KINDS].name())
}

/// Neumaier-compensated sum; stays accurate when large terms cancel.
fn sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut total = 0.0f64;
    let mut carry = 0.0f64;
    for x in values {
        let t = total + x;
        carry += if total.abs() >= x.abs() { (total - t) + x } else { (x - t) + total };
        total = t;
    }
    total + carry
}

fn mean(series: &[f64]) -> f64 {
    sum(series.iter().copied()) / series.len() as f64
}

/// Population variance (divisor n), two-pass.
fn variance(series: &[f64]) -> f64 {
    let m = mean(series);
    sum(series.iter().map(|x| (x - m) * (x - m))) / series.len() as f64
}

fn median(series: &[f64]) -> f64 {
    let mut v = series.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower_max + upper) / 2.0
    }
}

pub fn compute_feature(kind: FeatureKind, series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = series.len() as f64;
    Ok(match kind {
        FeatureKind::Sum => sum(series.iter().copied()),
        FeatureKind::Median => median(series),
        FeatureKind::Mean => mean(series),
        FeatureKind::Length => n,
        FeatureKind::StdDev => variance(series).sqrt(),
        FeatureKind::Variance => variance(series),
        FeatureKind::RootMeanSquare => (sum(series.iter().map(|x| x * x)) / n).sqrt(),
        FeatureKind::Maximum => series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        FeatureKind::AbsoluteMaximum => series.iter().map(|x| x.abs()).fold(0.0, f64::max),
        FeatureKind::Minimum => series.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// All ten statistics of a non-empty series, in `FeatureKind::ALL` order.
pub fn compute_all(series: &[f64]) -> Result<[f64; NUM_KINDS]> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut out = [0.0; NUM_KINDS];
    for kind in FeatureKind::ALL {
        out[kind.index()] = compute_feature(kind, series)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub flight_id: String,
    pub values: Vec<f64>,
    /// `false` for channels with no present samples (their slots are zero).
    pub channel_present: Vec<bool>,
}

/// Maps a recording to its 370 channel statistics over present samples.
pub fn extract_features(recording: &FlightRecording) -> FeatureVector {
    let mut values = vec![0.0; NUM_FEATURES];
    let mut channel_present = vec![false; NUM_CHANNELS];
    for ch in 0..NUM_CHANNELS {
        let series = recording.present_values(ch);
        if let Ok(stats) = compute_all(&series) {
            values[ch * NUM_KINDS..(ch + 1) * NUM_KINDS].copy_from_slice(&stats);
            channel_present[ch] = true;
        }
    }
    FeatureVector {
        flight_id: recording.flight_id().to_string(),
        values,
        channel_present,
    }
}

/// Dense row-major matrix of feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self { n_cols, data: Vec::new() }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut m = Self::new(n_cols);
        for r in rows {
            m.push_row(r.as_ref())?;
        }
        Ok(m)
    }

    pub fn from_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        let mut m = Self::new(NUM_FEATURES);
        for v in vectors {
            m.push_row(&v.values)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }
}

/// Writes `flight_id,label,f_000..f_369` rows for inspection with external tools.
pub fn write_feature_csv(path: impl AsRef<Path>, vectors: &[FeatureVector], labels: &[Option<Label>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("flight_id,label");
    for j in 0..NUM_FEATURES {
        let _ = write!(out, ",f_{j:03}");
    }
    out.push('\n');
    for (v, label) in vectors.iter().zip(labels) {
        out.push_str(&v.flight_id);
        out.push(',');
        if let Some(l) = label {
            let _ = write!(out, "{l}");
        }
        for x in &v.values {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Per-column shift and scale fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns that were constant in training; their scale is the sentinel 1.
    pub constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(features: &FeatureMatrix) -> Result<Self> {
        let n = features.n_rows();
        if n < 2 {
            return Err(Error::InsufficientRows { needed: 2, got: n });
        }
        let d = features.n_cols();
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        let mut constant = vec![false; d];
        for j in 0..d {
            let col = features.column(j);
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
            if lo == hi {
                // exact value so that training rows map to exactly zero
                mean[j] = lo;
                constant[j] = true;
                continue;
            }
            let m = sum(col.iter().copied()) / n as f64;
            let var = sum(col.iter().map(|x| (x - m) * (x - m))) / n as f64;
            mean[j] = m;
            if var > 0.0 {
                scale[j] = var.sqrt();
            } else {
                constant[j] = true;
            }
        }
        Ok(Self { mean, scale, constant })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn transform(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut out = FeatureMatrix::new(self.n_features());
        if features.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: features.n_cols(),
            });
        }
        for row in features.rows() {
            out.push_row(&self.transform_row(row)?)?;
        }
        Ok(out)
    }
}
