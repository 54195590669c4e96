//! Flight-level evaluation: ROC AUC plus precision, recall, F1 and accuracy.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::detector::{FlightScorer, Prediction};
use crate::error::{Error, Result};
use crate::recording::FlightRecording;

/// Mann-Whitney AUC with half credit for tied scores.
///
/// Computed exactly as `2U / (2·P·N)` with `2U` accumulated in integers, so
/// the result equals the pairwise definition bit-for-bit.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidRecording("NaN score".into()));
    }
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let positives = labels.iter().filter(|y| **y == 1).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut twice_u = 0u64;
    let mut negatives_below = 0u64;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            if pairs[j].1 == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_u += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
        i = j;
    }
    Ok(twice_u as f64 / (2 * positives * negatives) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(predicted: &[u8], labels: &[u8]) -> Self {
        let mut c = Self::default();
        for (p, y) in predicted.iter().zip(labels) {
            match (*p, *y) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Zero denominators give 0 for precision, recall and F1.
pub fn classification_metrics(c: &ConfusionCounts) -> ClassificationMetrics {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassificationMetrics {
        precision,
        recall,
        f1,
        accuracy: ratio(c.tp + c.tn, c.total()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightResult {
    pub flight_id: String,
    pub score: f64,
    pub label: u8,
    pub predicted: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `None` when the evaluation set holds a single class.
    pub roc_auc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub counts: ConfusionCounts,
    pub n_flights: usize,
    pub prevalence: f64,
    pub threshold: f64,
    pub flights: Vec<FlightResult>,
}

impl EvaluationReport {
    pub fn from_results(flights: Vec<FlightResult>, threshold: f64) -> Result<Self> {
        if flights.is_empty() {
            return Err(Error::InsufficientRows { needed: 1, got: 0 });
        }
        let scores: Vec<f64> = flights.iter().map(|f| f.score).collect();
        let labels: Vec<u8> = flights.iter().map(|f| f.label).collect();
        let predicted: Vec<u8> = flights.iter().map(|f| f.predicted).collect();
        let counts = ConfusionCounts::from_predictions(&predicted, &labels);
        let m = classification_metrics(&counts);
        let roc_auc = match roc_auc(&scores, &labels) {
            Ok(v) => Some(v),
            Err(Error::SingleClass) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            roc_auc,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            accuracy: m.accuracy,
            counts,
            n_flights: flights.len(),
            prevalence: (counts.tp + counts.fn_) as f64 / flights.len() as f64,
            threshold,
            flights,
        })
    }

    /// `key=value` lines for machine consumption.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let auc = self.roc_auc.map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(out, "roc_auc={auc}");
        let _ = writeln!(out, "precision={:.6}", self.precision);
        let _ = writeln!(out, "recall={:.6}", self.recall);
        let _ = writeln!(out, "f1={:.6}", self.f1);
        let _ = writeln!(out, "accuracy={:.6}", self.accuracy);
        let _ = writeln!(out, "tp={}", self.counts.tp);
        let _ = writeln!(out, "fp={}", self.counts.fp);
        let _ = writeln!(out, "tn={}", self.counts.tn);
        let _ = writeln!(out, "fn={}", self.counts.fn_);
        let _ = writeln!(out, "n_flights={}", self.n_flights);
        let _ = writeln!(out, "prevalence={:.6}", self.prevalence);
        let _ = writeln!(out, "threshold={}", self.threshold);
        out
    }

    /// Per-flight `flight_id,score,label,prediction` CSV.
    pub fn flights_csv(&self) -> String {
        let mut out = String::from("flight_id,score,label,prediction\n");
        for f in &self.flights {
            let _ = writeln!(out, "{},{},{},{}", f.flight_id, f.score, f.label, f.predicted);
        }
        out
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let auc = self.roc_auc.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "{:<10} {:>10} {:>10} {:>10} {:>10}", "ROC AUC", "Precision", "Recall", "F1", "Accuracy")?;
        writeln!(
            f,
            "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            auc, self.precision, self.recall, self.f1, self.accuracy
        )?;
        write!(
            f,
            "flights={} prevalence={:.4} tp={} fp={} tn={} fn={}",
            self.n_flights, self.prevalence, self.counts.tp, self.counts.fp, self.counts.tn, self.counts.fn_
        )
    }
}

/// Scores every flight with `scorer` and assembles the report.
///
/// Flights must carry labels. Errors carry the failing flight id.
pub fn evaluate<'a, S, I>(scorer: &S, recordings: I) -> Result<EvaluationReport>
where
    S: FlightScorer + ?Sized,
    I: IntoIterator<Item = &'a FlightRecording>,
{
    let mut flights = Vec::new();
    for r in recordings {
        let label = r
            .label()
            .ok_or_else(|| Error::InvalidRecording("evaluation flight has no label".into()).in_flight(r.flight_id()))?;
        let Prediction { score, label: predicted } = scorer.predict_flight(r).map_err(|e| e.in_flight(r.flight_id()))?;
        flights.push(FlightResult {
            flight_id: r.flight_id().to_string(),
            score,
            label: label.as_u8(),
            predicted,
        });
    }
    EvaluationReport::from_results(flights, scorer.threshold())
}
