//! Range-deviation baseline: a value is anomalous when it falls outside the
//! closed `[min, max]` envelope observed for its channel during training.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::recording::{FlightRecording, NUM_CHANNELS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub min: f64,
    pub max: f64,
}

impl Envelope {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

/// Which training flights contribute to the envelope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvelopeSource {
    #[default]
    AllFlights,
    NormalOnly,
}

/// Per-channel envelopes; `None` marks channels never present in training.
#[derive(Debug, Serialize, Deserialize)]
pub struct RangeModel {
    pub envelopes: Vec<Option<Envelope>>,
    pub source: EnvelopeSource,
    /// Detections requested on channels without an envelope.
    #[serde(skip)]
    unknown_channel_queries: AtomicU64,
}

impl Clone for RangeModel {
    fn clone(&self) -> Self {
        Self {
            envelopes: self.envelopes.clone(),
            source: self.source,
            unknown_channel_queries: AtomicU64::new(self.unknown_channel_queries()),
        }
    }
}

impl PartialEq for RangeModel {
    fn eq(&self, other: &Self) -> bool {
        self.envelopes == other.envelopes && self.source == other.source
    }
}

impl RangeModel {
    pub fn empty(source: EnvelopeSource) -> Self {
        Self {
            envelopes: vec![None; NUM_CHANNELS],
            source,
            unknown_channel_queries: AtomicU64::new(0),
        }
    }

    /// Fits envelopes over every present training value.
    pub fn fit<'a, I>(recordings: I, source: EnvelopeSource) -> Self
    where
        I: IntoIterator<Item = &'a FlightRecording>,
    {
        let mut model = Self::empty(source);
        for r in recordings {
            model.absorb(r);
        }
        model
    }

    /// Widens the envelopes with one training flight, honouring `source`.
    pub fn absorb(&mut self, recording: &FlightRecording) {
        if self.source == EnvelopeSource::NormalOnly && recording.label().is_some_and(|l| l.is_positive()) {
            return;
        }
        let partial = Self::of_flight(recording);
        self.merge(&partial);
    }

    /// Envelope of a single flight, ignoring labels.
    pub fn of_flight(recording: &FlightRecording) -> Self {
        let mut model = Self::empty(EnvelopeSource::AllFlights);
        for (ch, slot) in model.envelopes.iter_mut().enumerate() {
            for v in recording.present_values(ch) {
                match slot {
                    Some(e) => {
                        e.min = e.min.min(v);
                        e.max = e.max.max(v);
                    }
                    None => *slot = Some(Envelope { min: v, max: v }),
                }
            }
        }
        model
    }

    pub fn merge(&mut self, other: &RangeModel) {
        for (mine, theirs) in self.envelopes.iter_mut().zip(&other.envelopes) {
            *mine = match (*mine, *theirs) {
                (Some(a), Some(b)) => Some(Envelope {
                    min: a.min.min(b.min),
                    max: a.max.max(b.max),
                }),
                (a, b) => a.or(b),
            };
        }
    }

    pub fn unknown_channel_queries(&self) -> u64 {
        self.unknown_channel_queries.load(Ordering::Relaxed)
    }

    /// 1 when `value` lies outside the channel's envelope. Unknown channels never fire.
    pub fn detect_point(&self, value: f64, channel: usize) -> u8 {
        match self.envelopes.get(channel).copied().flatten() {
            Some(e) => u8::from(!e.contains(value)),
            None => {
                self.unknown_channel_queries.fetch_add(1, Ordering::Relaxed);
                0
            }
        }
    }

    /// Fraction of (epoch, present channel) pairs outside their envelope.
    /// The flight is flagged when the fraction is positive.
    pub fn detect_flight(&self, recording: &FlightRecording) -> (u8, f64) {
        let mut total = 0u64;
        let mut outside = 0u64;
        for ch in 0..NUM_CHANNELS {
            for v in recording.present_values(ch) {
                total += 1;
                outside += u64::from(self.detect_point(v, ch));
            }
        }
        let score = if total == 0 { 0.0 } else { outside as f64 / total as f64 };
        (u8::from(outside > 0), score)
    }
}
