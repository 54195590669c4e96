#![allow(dead_code)]

use proptest::prelude::*;
use rfi_core::recording::{quantize, DenseChannels, MaskedSeries, NUM_CNO};
use rfi_core::{FlightRecording, Label};

/// A C/No sample at the stored precision, or absent.
fn cno_sample() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        3 => (0.0f64..=60.0).prop_map(|v| Some(quantize(v))),
    ]
}

prop_compose! {
    fn dense_row()(
        heading in 0.0f64..359.99,
        roll in -180.0f64..=180.0,
        pitch in -90.0f64..=90.0,
        gs in 0.0f64..400.0,
        tas in 0.0f64..400.0,
    ) -> [f64; 5] {
        [quantize(heading), quantize(roll), quantize(pitch), quantize(gs), quantize(tas)]
    }
}

prop_compose! {
    /// Valid recordings with 1..=max_t epochs, random absence and optional label.
    pub fn arb_recording(max_t: usize)(t in 1..=max_t)(
        cno in proptest::collection::vec(proptest::collection::vec(cno_sample(), t), NUM_CNO),
        whole_channel_absent in proptest::collection::vec(any::<bool>(), NUM_CNO),
        dense in proptest::collection::vec(dense_row(), t),
        first_epoch in 0u64..1_000_000,
        steps in proptest::collection::vec(1u64..5, t),
        label in prop_oneof![Just(None), Just(Some(Label::Normal)), Just(Some(Label::Rfi))],
        id in "[A-Za-z0-9_.-]{1,12}",
    ) -> FlightRecording {
        let cno: Vec<MaskedSeries> = cno
            .iter()
            .zip(&whole_channel_absent)
            .map(|(samples, absent)| {
                if *absent {
                    MaskedSeries::absent(samples.len())
                } else {
                    MaskedSeries::from_options(samples)
                }
            })
            .collect();
        let mut d = DenseChannels::default();
        for row in &dense {
            d.heading.push(row[0]);
            d.roll.push(row[1]);
            d.pitch.push(row[2]);
            d.ground_speed.push(row[3]);
            d.true_airspeed.push(row[4]);
        }
        let mut epochs = Vec::with_capacity(steps.len());
        let mut e = first_epoch;
        for s in &steps {
            epochs.push(e);
            e += s;
        }
        FlightRecording::new(id, epochs, cno, d, label).expect("strategy yields valid recordings")
    }
}

/// Recording of `t` epochs whose C/No channel `sat` holds `values` and all
/// other satellites are absent.
pub fn single_channel(sat: usize, values: &[f64]) -> FlightRecording {
    let t = values.len();
    let mut cno = vec![MaskedSeries::absent(t); NUM_CNO];
    cno[sat] = MaskedSeries::from_options(&values.iter().map(|v| Some(*v)).collect::<Vec<_>>());
    let dense = DenseChannels {
        heading: vec![90.0; t],
        roll: vec![0.0; t],
        pitch: vec![2.0; t],
        ground_speed: vec![50.0; t],
        true_airspeed: vec![48.0; t],
    };
    FlightRecording::new("single", (0..t as u64).collect(), cno, dense, Some(Label::Normal)).unwrap()
}
