//! Trains all three detectors on a synthetic corpus and prints a comparison table.
//!
//! cargo run --release -p rfi-core --example benchmark -- [n_train] [n_test]

use std::time::Instant;

use rfi_core::detector::Detector;
use rfi_core::features::extract_features;
use rfi_core::gbdt::GbdtHyper;
use rfi_core::linear::LinearHyper;
use rfi_core::metrics::{EvaluationReport, FlightResult};
use rfi_core::range::{EnvelopeSource, RangeModel};
use rfi_core::{FeatureVector, FlightScorer, FlightSimulator, SimulationConfig};

struct Featurized {
    vector: FeatureVector,
    envelope: RangeModel,
    label: u8,
}

fn corpus(seed: u64, n: usize) -> Vec<Featurized> {
    let sim = FlightSimulator::new(SimulationConfig {
        seed,
        n_flights: n,
        ..SimulationConfig::default()
    })
    .expect("valid config");
    sim.map_flights(|r| Featurized {
        vector: extract_features(&r),
        envelope: RangeModel::of_flight(&r),
        label: r.label().expect("labelled").as_u8(),
    })
    .expect("simulation")
}

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n_train = args.first().copied().unwrap_or(2000);
    let n_test = args.get(1).copied().unwrap_or(500);

    let t0 = Instant::now();
    let train = corpus(20_240_601, n_train);
    let test = corpus(20_240_602, n_test);
    println!("simulated {n_train}+{n_test} flights in {:.1?}", t0.elapsed());

    let train_vecs: Vec<FeatureVector> = train.iter().map(|f| f.vector.clone()).collect();
    let train_labels: Vec<u8> = train.iter().map(|f| f.label).collect();

    let mut range = RangeModel::empty(EnvelopeSource::AllFlights);
    for f in &train {
        range.merge(&f.envelope);
    }

    let t = Instant::now();
    let linear = Detector::train_linear(&train_vecs, &train_labels, LinearHyper::default(), 0).unwrap();
    println!("linear trained in {:.1?}", t.elapsed());
    let t = Instant::now();
    let gbdt = Detector::train_gbdt(&train_vecs, &train_labels, GbdtHyper::default(), 0).unwrap();
    println!("gbdt trained in {:.1?}", t.elapsed());

    let report = |name: &str, results: Vec<FlightResult>, threshold: f64| {
        let r = EvaluationReport::from_results(results, threshold).unwrap();
        println!("\n== {name}\n{r}");
    };

    // The range model needs raw samples; re-simulate the test flights for it.
    let sim = FlightSimulator::new(SimulationConfig {
        seed: 20_240_602,
        n_flights: n_test,
        ..SimulationConfig::default()
    })
    .unwrap();
    let range_results = sim
        .map_flights(|r| {
            let p = Detector::Range(range.clone()).predict_flight(&r).unwrap();
            FlightResult {
                flight_id: r.flight_id().to_string(),
                score: p.score,
                label: r.label().unwrap().as_u8(),
                predicted: p.label,
            }
        })
        .unwrap();
    report("range", range_results, 0.0);

    for (name, det) in [("linear", &linear), ("gbdt", &gbdt)] {
        let results = test
            .iter()
            .map(|f| {
                let p = det.predict_features(&f.vector).unwrap();
                FlightResult {
                    flight_id: f.vector.flight_id.clone(),
                    score: p.score,
                    label: f.label,
                    predicted: p.label,
                }
            })
            .collect();
        report(name, results, det.threshold());
    }
}
