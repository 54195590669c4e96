//! A trained detector bundled with the preprocessing it was fitted with.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureMatrix, FeatureVector, Standardizer};
use crate::gbdt::{train_gbdt, BoostedModel, GbdtHyper};
use crate::linear::{train_logistic, LinearHyper, LinearModel};
use crate::range::RangeModel;
use crate::recording::FlightRecording;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    /// Ranking score: RFI probability, or out-of-envelope fraction for the range model.
    pub score: f64,
    pub label: u8,
}

/// Anything that turns a whole recording into a flight-level decision.
pub trait FlightScorer {
    fn predict_flight(&self, recording: &FlightRecording) -> Result<Prediction>;
    /// Decision threshold reported alongside evaluation results.
    fn threshold(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Range,
    Linear,
    Gbdt,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Range => "range",
            DetectorKind::Linear => "linear",
            DetectorKind::Gbdt => "gbdt",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(DetectorKind::Range),
            "linear" => Ok(DetectorKind::Linear),
            "gbdt" => Ok(DetectorKind::Gbdt),
            other => Err(Error::Config(format!("unknown model kind {other:?} (expected range|linear|gbdt)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Detector {
    Range(RangeModel),
    Linear {
        standardizer: Standardizer,
        model: LinearModel,
    },
    Gbdt {
        standardizer: Standardizer,
        model: BoostedModel,
    },
}

impl Detector {
    pub fn kind(&self) -> DetectorKind {
        match self {
            Detector::Range(_) => DetectorKind::Range,
            Detector::Linear { .. } => DetectorKind::Linear,
            Detector::Gbdt { .. } => DetectorKind::Gbdt,
        }
    }

    /// Fits the standardiser on `vectors` and trains logistic regression on the scaled rows.
    pub fn train_linear(vectors: &[FeatureVector], labels: &[u8], hyper: LinearHyper, seed: u64) -> Result<Self> {
        let raw = FeatureMatrix::from_vectors(vectors)?;
        let standardizer = Standardizer::fit(&raw)?;
        let scaled = standardizer.transform(&raw)?;
        let model = train_logistic(&scaled, labels, hyper, seed)?;
        Ok(Detector::Linear { standardizer, model })
    }

    pub fn train_gbdt(vectors: &[FeatureVector], labels: &[u8], hyper: GbdtHyper, seed: u64) -> Result<Self> {
        let raw = FeatureMatrix::from_vectors(vectors)?;
        let standardizer = Standardizer::fit(&raw)?;
        let scaled = standardizer.transform(&raw)?;
        let model = train_gbdt(&scaled, labels, hyper, seed)?;
        Ok(Detector::Gbdt { standardizer, model })
    }

    /// Scores an already-extracted feature vector. Not available for the range model,
    /// which works on raw samples.
    pub fn predict_features(&self, features: &FeatureVector) -> Result<Prediction> {
        let (score, label) = match self {
            Detector::Range(_) => {
                return Err(Error::Config("range model scores raw recordings, not feature vectors".into()))
            }
            Detector::Linear { standardizer, model } => model.predict(&standardizer.transform_row(&features.values)?)?,
            Detector::Gbdt { standardizer, model } => model.predict(&standardizer.transform_row(&features.values)?)?,
        };
        Ok(Prediction { score, label })
    }
}

impl FlightScorer for Detector {
    fn predict_flight(&self, recording: &FlightRecording) -> Result<Prediction> {
        match self {
            Detector::Range(model) => {
                let (label, score) = model.detect_flight(recording);
                Ok(Prediction { score, label })
            }
            _ => self.predict_features(&extract_features(recording)),
        }
    }

    fn threshold(&self) -> f64 {
        match self {
            Detector::Range(_) => 0.0,
            Detector::Linear { model, .. } => model.threshold,
            Detector::Gbdt { .. } => 0.5,
        }
    }
}
