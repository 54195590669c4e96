//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfi_core::features::{compute_feature, FeatureKind};
use rfi_core::gbdt::{train_gbdt_traced, BinningTable, GbdtHyper, Node};
use rfi_core::linear::{LinearHyper, LogisticObjective};
use rfi_core::metrics::FlightResult;
use rfi_core::range::{EnvelopeSource, RangeModel};
use rfi_core::simulator::simulate_flight_with_duration;
use rfi_core::{
    extract_features, roc_auc, sigmoid, Detector, EvaluationReport, FeatureMatrix, FeatureVector, FlightSimulator,
    JammingEvent, SimulationConfig, Standardizer,
};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// ---------------------------------------------------------------- 1

/// Exact statistics of the series `k_i · 2^-s`, computed in integers.
fn exact_feature(kind: FeatureKind, ks: &[i64], s: i32) -> f64 {
    let n = ks.len() as i128;
    let scale = 2f64.powi(-s);
    let sum: i128 = ks.iter().map(|k| *k as i128).sum();
    let sum_sq: i128 = ks.iter().map(|k| (*k as i128) * (*k as i128)).sum();
    let var = || (n * sum_sq - sum * sum) as f64 / (n * n) as f64 * scale * scale;
    let mut sorted = ks.to_vec();
    sorted.sort_unstable();
    match kind {
        FeatureKind::Sum => sum as f64 * scale,
        FeatureKind::Mean => sum as f64 / n as f64 * scale,
        FeatureKind::Length => n as f64,
        FeatureKind::Variance => var(),
        FeatureKind::StdDev => var().sqrt(),
        FeatureKind::RootMeanSquare => (sum_sq as f64 / n as f64).sqrt() * scale,
        FeatureKind::Median => {
            let m = sorted.len() / 2;
            if sorted.len() % 2 == 1 {
                sorted[m] as f64 * scale
            } else {
                (sorted[m - 1] as i128 + sorted[m] as i128) as f64 / 2.0 * scale
            }
        }
        FeatureKind::Maximum => *sorted.last().unwrap() as f64 * scale,
        FeatureKind::Minimum => sorted[0] as f64 * scale,
        FeatureKind::AbsoluteMaximum => sorted.iter().map(|k| k.unsigned_abs()).max().unwrap() as f64 * scale,
    }
}

fn relative_error(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs()
    }
}

fn crit1() -> String {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for kind in FeatureKind::ALL {
        for case in 0..1000 {
            let n = rng.random_range(1..=2000usize);
            // values in [-50, 50] on a dyadic grid fine enough to use ~46 significant bits
            let s = rng.random_range(0..=40);
            let bound = 50i64 << s;
            let ks: Vec<i64> = if case % 10 == 0 {
                // heavy ties
                let pool: Vec<i64> = (0..3).map(|_| rng.random_range(-bound..=bound)).collect();
                (0..n).map(|_| pool[rng.random_range(0..3)]).collect()
            } else {
                (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
            };
            let scale = 2f64.powi(-s);
            let series: Vec<f64> = ks.iter().map(|k| *k as f64 * scale).collect();
            let got = compute_feature(kind, &series).unwrap();
            let want = exact_feature(kind, &ks, s);
            let err = relative_error(got, want);
            assert!(err <= 1e-9, "{kind:?} case {case} (n={n}): {got} vs {want}, rel {err:e}");
            worst = worst.max(err);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 10.0, "took {secs:.2} s");
    format!("10000 series, max rel err {worst:.2e}, {secs:.2} s")
}

// ---------------------------------------------------------------- 2

fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut half_credits, mut pairs) = (0u64, 0u64);
    for (sp, yp) in scores.iter().zip(labels) {
        if *yp != 1 {
            continue;
        }
        for (sn, yn) in scores.iter().zip(labels) {
            if *yn != 0 {
                continue;
            }
            pairs += 1;
            if sp > sn {
                half_credits += 2;
            } else if sp == sn {
                half_credits += 1;
            }
        }
    }
    half_credits as f64 / (2 * pairs) as f64
}

fn crit2() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tied_sets = 0;
    for set in 0..200 {
        let n = rng.random_range(2..=200usize);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.3))).collect();
        labels[0] = 0;
        labels[1] = 1;
        let pool: Vec<f64> = (0..rng.random_range(1..=8)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    pool[rng.random_range(0..pool.len())]
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let mut distinct = scores.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        tied_sets += usize::from(distinct.len() < n);
        let got = roc_auc(&scores, &labels).unwrap();
        let want = pairwise_auc(&scores, &labels);
        assert_eq!(got, want, "set {set}");
    }
    format!("200 sets exact ({tied_sets} with ties)")
}

// ---------------------------------------------------------------- 3

fn crit3() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for problem in 0..50 {
        let rows = rng.random_range(2..=50usize);
        let cols = rng.random_range(1..=10usize);
        let x: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let y: Vec<u8> = (0..rows).map(|_| u8::from(rng.random_bool(0.4))).collect();
        let l2 = rng.random_range(0.0..0.5);
        let w: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let x = FeatureMatrix::from_rows(&x).unwrap();
        let obj = LogisticObjective::new(&x, &y, l2).unwrap();
        let (gw, gb) = obj.gradient(&w, b);
        let mut analytic = gw;
        analytic.push(gb);
        let mut numeric = Vec::with_capacity(cols + 1);
        for j in 0..=cols {
            let shifted = |d: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < cols {
                    w2[j] += d;
                } else {
                    b2 += d;
                }
                obj.loss(&w2, b2)
            };
            numeric.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric));
        assert!(rel <= 1e-4, "problem {problem}: relative error {rel:e}");
        worst = worst.max(rel);
    }
    format!("50 problems, max relative error {worst:.2e}")
}

// ---------------------------------------------------------------- 4

struct OracleSplit {
    feature: usize,
    bin: usize,
    gain: f64,
}

fn oracle_gain(gl: f64, hl: f64, gr: f64, hr: f64, l2: f64) -> f64 {
    0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2) - (gl + gr) * (gl + gr) / (hl + hr + l2))
}

/// Best split of one leaf by exhaustive search over every (feature, bin).
/// Ties within the gain tolerance go to the earliest (feature, bin).
fn brute_force_split(
    x: &FeatureMatrix,
    bins: &BinningTable,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
    hyper: &GbdtHyper,
) -> Option<OracleSplit> {
    let min_leaf = hyper.min_samples_leaf.max(1);
    if rows.len() < 2 * min_leaf {
        return None;
    }
    let mut candidates = Vec::new();
    for f in 0..x.n_cols() {
        let edges = &bins.edges[f];
        for (b, edge) in edges.iter().enumerate().take(edges.len() - 1) {
            let (mut gl, mut hl, mut gr, mut hr, mut nl) = (0.0, 0.0, 0.0, 0.0, 0usize);
            for &r in rows {
                let r = r as usize;
                if x.get(r, f) <= *edge {
                    gl += grad[r];
                    hl += hess[r];
                    nl += 1;
                } else {
                    gr += grad[r];
                    hr += hess[r];
                }
            }
            if nl < min_leaf || rows.len() - nl < min_leaf {
                continue;
            }
            let gain = oracle_gain(gl, hl, gr, hr, hyper.l2_leaf);
            if gain > 0.0 {
                candidates.push(OracleSplit { feature: f, bin: b, gain });
            }
        }
    }
    let best = candidates.iter().map(|c| c.gain).fold(f64::NEG_INFINITY, f64::max);
    candidates.into_iter().find(|c| c.gain >= best - 1e-10 * best.abs())
}

fn gbdt_dataset(rng: &mut ChaCha8Rng) -> (FeatureMatrix, Vec<u8>) {
    let rows = rng.random_range(50..=500usize);
    let cols = rng.random_range(1..=5usize);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for j in 0..cols {
        let col: Vec<f64> = match (j, rng.random_range(0..4)) {
            // duplicated column: every split on it ties exactly with its twin
            (j, 0) if j > 0 => columns[rng.random_range(0..j)].clone(),
            (_, 1) => (0..rows).map(|_| f64::from(rng.random_range(0..6))).collect(),
            _ => (0..rows).map(|_| rng.random_range(-3.0..3.0)).collect(),
        };
        columns.push(col);
    }
    let y: Vec<u8> = (0..rows)
        .map(|i| {
            let z = 1.5 * columns[0][i] - columns[cols - 1][i].abs() + 0.3;
            u8::from(rng.random::<f64>() < sigmoid(z))
        })
        .collect();
    let matrix: Vec<Vec<f64>> = (0..rows).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    (FeatureMatrix::from_rows(&matrix).unwrap(), y)
}

fn crit4() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total_splits = 0;
    let mut datasets = 0;
    while datasets < 20 {
        let (x, y) = gbdt_dataset(&mut rng);
        let positives = y.iter().filter(|v| **v == 1).count();
        if positives == 0 || positives == y.len() {
            continue;
        }
        datasets += 1;
        let hyper = GbdtHyper {
            n_trees: rng.random_range(2..=6),
            learning_rate: rng.random_range(0.1..0.5),
            max_leaves: rng.random_range(2..=12),
            min_samples_leaf: rng.random_range(1..=20),
            l2_leaf: rng.random_range(0.0..2.0),
            max_bins: [4, 16, 64, 255][rng.random_range(0..4)],
        };
        let (model, trace) = train_gbdt_traced(&x, &y, hyper, 0, true).unwrap();
        let bins = &model.bins;
        let n = x.n_rows();

        let mut scores = vec![model.base_score; n];
        let mut records = trace.splits.iter().peekable();
        for (t, tree) in model.trees.iter().enumerate() {
            let grad: Vec<f64> = (0..n).map(|i| sigmoid(scores[i]) - f64::from(y[i])).collect();
            let hess: Vec<f64> = (0..n)
                .map(|i| {
                    let p = sigmoid(scores[i]);
                    p * (1.0 - p)
                })
                .collect();

            // replay leaf-wise growth with brute-force splits
            let mut open: Vec<(usize, Vec<u32>, Option<OracleSplit>)> = Vec::new();
            let all: Vec<u32> = (0..n as u32).collect();
            let best = brute_force_split(&x, bins, &all, &grad, &hess, &hyper);
            open.push((0, all, best));
            let mut next_id = 1;
            while open.len() < hyper.max_leaves {
                let mut pick: Option<usize> = None;
                let max_gain = open
                    .iter()
                    .filter_map(|l| l.2.as_ref().map(|s| s.gain))
                    .fold(f64::NEG_INFINITY, f64::max);
                for (i, leaf) in open.iter().enumerate() {
                    if let Some(s) = &leaf.2 {
                        if s.gain >= max_gain - 1e-10 * max_gain.abs() && pick.is_none_or(|p| leaf.0 < open[p].0) {
                            pick = Some(i);
                        }
                    }
                }
                let Some(i) = pick else { break };
                let (node, rows, split) = open.remove(i);
                let split = split.unwrap();
                let record = records.next().unwrap_or_else(|| panic!("dataset {datasets} tree {t}: missing split"));
                assert_eq!(
                    (record.tree, record.node, record.feature, record.bin),
                    (t, node, split.feature, split.bin),
                    "dataset {datasets} tree {t}: oracle gain {} vs recorded {}",
                    split.gain,
                    record.gain
                );
                assert_eq!(record.rows.as_deref(), Some(&rows[..]));
                let edge = bins.edges[split.feature][split.bin];
                let (left, right): (Vec<u32>, Vec<u32>) =
                    rows.iter().partition(|r| x.get(**r as usize, split.feature) <= edge);
                for (id, part) in [(next_id, left), (next_id + 1, right)] {
                    let s = brute_force_split(&x, bins, &part, &grad, &hess, &hyper);
                    open.push((id, part, s));
                }
                next_id += 2;
                total_splits += 1;
            }
            assert!(
                records.peek().is_none_or(|r| r.tree != t),
                "dataset {datasets} tree {t}: model split more than the oracle"
            );
            assert_eq!(tree.nodes.len(), next_id);
            for (i, node) in tree.nodes.iter().enumerate() {
                if let Node::Split { threshold, feature, bin, .. } = node {
                    assert_eq!(*threshold, bins.edges[*feature][*bin], "node {i}");
                }
            }
            for (i, s) in scores.iter_mut().enumerate() {
                *s += tree.predict(x.row(i));
            }
        }
        assert!(records.next().is_none());
    }
    format!("20 datasets, {total_splits} splits matched")
}

// ---------------------------------------------------------------- 5, 6, 7, 10

struct Benchmark {
    train_vectors: Vec<FeatureVector>,
    gbdt: Detector,
    auc_range: f64,
    auc_linear: f64,
    auc_gbdt: f64,
    acc_gbdt: f64,
    acc_linear: f64,
    seconds: f64,
}

fn load_config(name: &str) -> SimulationConfig {
    SimulationConfig::load(repo_root().join("configs").join(name)).unwrap()
}

fn report(scores: &[(f64, u8)], labels: &[u8], threshold: f64) -> EvaluationReport {
    let results = scores
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, ((score, predicted), label))| FlightResult {
            flight_id: FlightSimulator::flight_id(i),
            score: *score,
            label: *label,
            predicted: *predicted,
        })
        .collect();
    EvaluationReport::from_results(results, threshold).unwrap()
}

fn benchmark() -> &'static Benchmark {
    static BENCH: OnceLock<Benchmark> = OnceLock::new();
    BENCH.get_or_init(|| {
        let started = Instant::now();
        let train_sim = FlightSimulator::new(load_config("benchmark_train.toml")).unwrap();
        let train: Vec<(FeatureVector, RangeModel, u8)> = train_sim
            .map_flights(|r| (extract_features(&r), RangeModel::of_flight(&r), r.label().unwrap().as_u8()))
            .unwrap();
        let mut range = RangeModel::empty(EnvelopeSource::AllFlights);
        for (_, partial, _) in &train {
            range.merge(partial);
        }
        let labels: Vec<u8> = train.iter().map(|t| t.2).collect();
        let train_vectors: Vec<FeatureVector> = train.into_iter().map(|t| t.0).collect();
        let linear = Detector::train_linear(&train_vectors, &labels, LinearHyper::default(), 0).unwrap();
        let gbdt = Detector::train_gbdt(&train_vectors, &labels, GbdtHyper::default(), 0).unwrap();

        let test_sim = FlightSimulator::new(load_config("benchmark_test.toml")).unwrap();
        let test: Vec<(FeatureVector, (u8, f64), u8)> = test_sim
            .map_flights(|r| (extract_features(&r), range.detect_flight(&r), r.label().unwrap().as_u8()))
            .unwrap();
        let test_labels: Vec<u8> = test.iter().map(|t| t.2).collect();
        let score_with = |d: &Detector| -> Vec<(f64, u8)> {
            test.iter()
                .map(|t| {
                    let p = d.predict_features(&t.0).unwrap();
                    (p.score, p.label)
                })
                .collect()
        };
        let range_scores: Vec<f64> = test.iter().map(|t| t.1 .1).collect();
        let linear_report = report(&score_with(&linear), &test_labels, 0.5);
        let gbdt_report = report(&score_with(&gbdt), &test_labels, 0.5);
        Benchmark {
            train_vectors,
            gbdt,
            auc_range: roc_auc(&range_scores, &test_labels).unwrap(),
            auc_linear: linear_report.roc_auc.unwrap(),
            auc_gbdt: gbdt_report.roc_auc.unwrap(),
            acc_gbdt: gbdt_report.accuracy,
            acc_linear: linear_report.accuracy,
            seconds: started.elapsed().as_secs_f64(),
        }
    })
}

fn crit5() -> String {
    let b = benchmark();
    let summary = format!(
        "AUC gbdt {:.4} linear {:.4} range {:.4}; accuracy gbdt {:.4} linear {:.4}; {:.1} s",
        b.auc_gbdt, b.auc_linear, b.auc_range, b.acc_gbdt, b.acc_linear, b.seconds
    );
    assert!(b.auc_gbdt >= 0.90, "gbdt AUC below 0.90: {summary}");
    assert!(b.acc_gbdt >= 0.90, "gbdt accuracy below 0.90: {summary}");
    assert!(b.auc_linear >= 0.80, "linear AUC below 0.80: {summary}");
    assert!(b.auc_gbdt > b.auc_range && b.auc_linear > b.auc_range, "range not beaten: {summary}");
    assert!(b.auc_range > 0.5, "range AUC not above chance: {summary}");
    assert!(b.seconds < 600.0, "{summary}");
    summary
}

fn crit6() -> String {
    let b = benchmark();
    assert!(
        b.auc_gbdt >= b.auc_linear - 0.02,
        "gbdt {:.4} vs linear {:.4}",
        b.auc_gbdt,
        b.auc_linear
    );
    format!("gbdt {:.4} >= linear {:.4} - 0.02", b.auc_gbdt, b.auc_linear)
}

fn crit7() -> String {
    let detector = &benchmark().gbdt;
    let cfg = SimulationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let flights: Vec<_> = (0..100)
        .map(|i| {
            let jam = (i % 5 == 0).then_some(JammingEvent {
                start: 600,
                ramp: 30,
                plateau: 300,
                depth: 6.0,
            });
            simulate_flight_with_duration(&cfg, &mut rng, &format!("T{i}"), 1700, jam).unwrap()
        })
        .collect();
    let started = Instant::now();
    let mut flagged = 0;
    for f in &flights {
        let v = extract_features(f);
        flagged += detector.predict_features(&v).unwrap().label as usize;
    }
    let mean = started.elapsed().as_secs_f64() / flights.len() as f64;
    assert!(mean <= 0.1, "mean {mean:.4} s per flight");
    format!("mean {mean:.2e} s per flight over 100 flights of 1700 epochs ({flagged} flagged)")
}

fn crit10() -> String {
    let check = |m: &FeatureMatrix, what: &str| -> (usize, usize) {
        let st = Standardizer::fit(m).unwrap();
        let z = st.transform(m).unwrap();
        let n = z.n_rows() as f64;
        let (mut constant, mut scaled) = (0, 0);
        for j in 0..z.n_cols() {
            let col = z.column(j);
            let raw = m.column(j);
            if raw.iter().all(|v| *v == raw[0]) {
                assert!(col.iter().all(|v| *v == 0.0), "{what}: constant column {j} not zeroed");
                constant += 1;
            } else {
                let mean = col.iter().sum::<f64>() / n;
                let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
                assert!(mean.abs() < 1e-9, "{what}: column {j}: mean {mean:e}");
                assert!((sd - 1.0).abs() < 1e-9, "{what}: column {j}: std {sd}");
                scaled += 1;
            }
        }
        (constant, scaled)
    };
    let bench = FeatureMatrix::from_vectors(&benchmark().train_vectors).unwrap();
    let (c0, s0) = check(&bench, "benchmark");

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..50 {
        let rows = rng.random_range(2..=500usize);
        let cols = rng.random_range(1..=20usize);
        let kinds: Vec<(u8, f64, f64)> = (0..cols)
            .map(|_| {
                let offset: f64 = rng.random_range(-1e6..1e6);
                // spread at least 1e-6 of the offset: a single f64 mean carries
                // rounding error up to ulp(offset)/2, which scaled by 1/spread
                // must stay below the 1e-9 tolerance
                let min_exp = (offset.abs() * 1e-6).max(1e-3).log10();
                (rng.random_range(0..4), offset, 10f64.powf(rng.random_range(min_exp..min_exp.max(3.0) + 0.1)))
            })
            .collect();
        let matrix: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                kinds
                    .iter()
                    .map(|(kind, offset, scale)| match kind {
                        0 => *offset,
                        1 => f64::from(rng.random_range(0..2u8)) * scale,
                        _ => offset + scale * rng.random_range(-1.0..1.0),
                    })
                    .collect()
            })
            .collect();
        check(&FeatureMatrix::from_rows(&matrix).unwrap(), &format!("random matrix {case}"));
    }
    format!("benchmark matrix: {s0} scaled, {c0} constant columns; 50 random matrices")
}

// ---------------------------------------------------------------- 8

fn crit8() -> String {
    let cfg = SimulationConfig {
        max_maneuvers: 0,
        ..SimulationConfig::default()
    };
    let window = 300;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut channels, mut excluded) = (0, 0);
    let (mut worst_drop, mut worst_ratio) = (0.0f64, 0.0f64);
    for flight in 0..50 {
        let jam = JammingEvent {
            start: rng.random_range(window..=900),
            ramp: rng.random_range(10..=120),
            plateau: window,
            depth: rng.random_range(3.0..=10.0),
        };
        let rec = simulate_flight_with_duration(&cfg, &mut rng, &format!("C{flight}"), 1700, Some(jam)).unwrap();
        let pre_range = jam.start - window..jam.start;
        let plateau_range = jam.plateau_start()..jam.plateau_end();
        for sat in rec.tracked_satellites() {
            let c = rec.cno(sat);
            let pre: Option<Vec<f64>> = pre_range.clone().map(|t| c.get(t)).collect();
            let plateau: Option<Vec<f64>> = plateau_range.clone().map(|t| c.get(t)).collect();
            let (Some(pre), Some(plateau)) = (pre, plateau) else {
                excluded += 1;
                continue;
            };
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let sd = |v: &[f64]| {
                let m = mean(v);
                (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
            };
            let drop = mean(&pre) - mean(&plateau);
            let ratio = sd(&plateau) / sd(&pre);
            assert!(
                (drop - jam.depth).abs() <= 0.5,
                "flight {flight} sat {sat}: drop {drop:.3} vs depth {:.3}",
                jam.depth
            );
            assert!((ratio - 1.0).abs() < 0.3, "flight {flight} sat {sat}: std ratio {ratio:.3}");
            worst_drop = worst_drop.max((drop - jam.depth).abs());
            worst_ratio = worst_ratio.max((ratio - 1.0).abs());
            channels += 1;
        }
    }
    format!(
        "50 flights, {channels} channels: max |drop-d| {worst_drop:.3} dB, max |std ratio-1| {worst_ratio:.3}; \
         {excluded} channels lost lock in a window"
    )
}

// ---------------------------------------------------------------- 9

fn gnss_rfi(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_gnss-rfi")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn crit9() -> String {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_root().join("configs/small.toml");
    let config = config.to_str().unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let data = dir.path().join(run).join("data");
        gnss_rfi(&["simulate", "--config", config, "--seed", "11", "--out", data.to_str().unwrap()]);
        let manifest = data.join("manifest.csv");
        for kind in ["range", "linear", "gbdt"] {
            let model = dir.path().join(run).join(format!("{kind}.model"));
            gnss_rfi(&[
                "train",
                "--manifest",
                manifest.to_str().unwrap(),
                "--model-kind",
                kind,
                "--seed",
                "5",
                "--out",
                model.to_str().unwrap(),
            ]);
        }
        trees.push(read_tree(&dir.path().join(run)));
    }
    assert_eq!(trees[0].keys().collect::<Vec<_>>(), trees[1].keys().collect::<Vec<_>>());
    for (name, bytes) in &trees[0] {
        assert!(trees[1][name] == *bytes, "{name} differs between runs");
    }
    format!("{} files byte-identical across two runs", trees[0].len())
}

type Criterion = (&'static str, fn() -> String);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 feature oracle", crit1),
        ("2 AUC oracle", crit2),
        ("3 gradient check", crit3),
        ("4 GBDT split oracle", crit4),
        ("5 end-to-end benchmark", crit5),
        ("6 metric ordering", crit6),
        ("7 inference budget", crit7),
        ("8 simulator common mode", crit8),
        ("9 determinism", crit9),
        ("10 standardizer invariants", crit10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
