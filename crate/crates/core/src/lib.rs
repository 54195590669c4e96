//! Detection of GNSS radio-frequency interference in aircraft flight recordings.
//!
//! The crate turns multichannel 1 Hz recordings (32 C/No channels plus attitude
//! and speed) into fixed-length statistical feature vectors and scores them with
//! one of three detectors:
//!
//! * [`range::RangeModel`], a per-channel min/max envelope,
//! * [`linear::LinearModel`], L2-regularised logistic regression,
//! * [`gbdt::BoostedModel`], histogram-based leaf-wise gradient boosting.
//!
//! [`simulator`] produces labelled synthetic flights with common-mode C/No drops,
//! and [`model_file`] persists trained detectors together with their
//! preprocessing in a versioned, checksummed text container.

pub mod detector;
pub mod error;
pub mod features;
pub mod gbdt;
pub mod linear;
pub mod metrics;
pub mod model_file;
pub mod range;
pub mod recording;
pub mod simulator;

pub use detector::{Detector, FlightScorer, Prediction};
pub use error::{Error, Result};
pub use features::{extract_features, FeatureKind, FeatureMatrix, FeatureVector, Standardizer};
pub use metrics::{evaluate, roc_auc, ConfusionCounts, EvaluationReport};
pub use recording::{Dataset, FlightRecording, Label, Manifest};
pub use simulator::{FlightSimulator, JammingEvent, SimulationConfig};

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
