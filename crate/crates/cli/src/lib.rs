//! Subcommands of the `gnss-rfi` tool. Each command writes its human-readable
//! output to the supplied writer so it can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use rfi_core::detector::{Detector, DetectorKind};
use rfi_core::features::{extract_features, write_feature_csv};
use rfi_core::gbdt::GbdtHyper;
use rfi_core::linear::LinearHyper;
use rfi_core::metrics::{EvaluationReport, FlightResult};
use rfi_core::model_file;
use rfi_core::range::{EnvelopeSource, RangeModel};
use rfi_core::recording::{parse_flight_csv, Manifest};
use rfi_core::simulator::generate_dataset;
use rfi_core::{FeatureVector, FlightScorer, SimulationConfig};

#[derive(Debug, Parser)]
#[command(name = "gnss-rfi", version, about = "GNSS interference detection on flight recordings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled dataset (flight CSVs plus manifest).
    Simulate(SimulateArgs),
    /// Dump the 370-column feature matrix of a dataset as CSV.
    Featurize(FeaturizeArgs),
    /// Train a detector and write a model file.
    Train(TrainArgs),
    /// Score a labelled dataset and report ROC AUC, precision, recall, F1, accuracy.
    Evaluate(EvaluateArgs),
    /// Score a single flight file.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Key-value (TOML) simulation config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_flights: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub model_kind: DetectorKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability cut for the linear model.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_leaves: Option<usize>,
    /// L2 penalty: weight decay for linear, leaf regulariser for gbdt.
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Fit the range envelope on normal flights only.
    #[arg(long)]
    pub normal_only: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Key-value report output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-flight `flight_id,score,label,prediction` CSV.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub flight: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<DetectorKind, String> {
    s.parse().map_err(|e: rfi_core::Error| e.to_string())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Featurize(a) => cmd_featurize(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Predict(a) => cmd_predict(&a, out),
    }
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => SimulationConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
        None => SimulationConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.n_flights {
        config.n_flights = n;
    }
    config.validate()?;
    let generated = generate_dataset(&config, &args.out)?;
    let prevalence = if generated.n_flights == 0 {
        0.0
    } else {
        generated.n_jammed as f64 / generated.n_flights as f64
    };
    writeln!(
        out,
        "flights={} jammed={} prevalence={:.4} mean_T={:.1} manifest={}",
        generated.n_flights,
        generated.n_jammed,
        prevalence,
        generated.mean_duration,
        generated.manifest.path.display()
    )?;
    Ok(())
}

pub fn cmd_featurize(args: &FeaturizeArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = Manifest::read(&args.manifest)?;
    let vectors = manifest.map_flights(|r| Ok(extract_features(&r)))?;
    let labels: Vec<_> = manifest.entries.iter().map(|e| Some(e.label)).collect();
    write_feature_csv(&args.out, &vectors, &labels)?;
    writeln!(out, "rows={} columns={} out={}", vectors.len(), vectors.first().map_or(0, |v| v.values.len()), args.out.display())?;
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = Manifest::read(&args.manifest)?;
    if manifest.entries.is_empty() {
        bail!("manifest {} lists no flights", args.manifest.display());
    }
    let labels: Vec<u8> = manifest.entries.iter().map(|e| e.label.as_u8()).collect();
    let positives = labels.iter().filter(|y| **y == 1).count();
    if positives == 0 || positives == labels.len() {
        warn!("training data holds a single class ({positives}/{} positive)", labels.len());
    }

    let detector = match args.model_kind {
        DetectorKind::Range => {
            let source = if args.normal_only {
                EnvelopeSource::NormalOnly
            } else {
                EnvelopeSource::AllFlights
            };
            let partials = manifest.map_flights(|r| {
                let mut m = RangeModel::empty(source);
                m.absorb(&r);
                Ok(m)
            })?;
            let mut model = RangeModel::empty(source);
            for p in &partials {
                model.merge(p);
            }
            Detector::Range(model)
        }
        DetectorKind::Linear => {
            let vectors: Vec<FeatureVector> = manifest.map_flights(|r| Ok(extract_features(&r)))?;
            let defaults = LinearHyper::default();
            let hyper = LinearHyper {
                l2: args.l2.unwrap_or(defaults.l2),
                max_iters: args.max_iters.unwrap_or(defaults.max_iters),
                ..defaults
            };
            let mut detector = Detector::train_linear(&vectors, &labels, hyper, args.seed)?;
            if let (Some(t), Detector::Linear { model, .. }) = (args.threshold, &mut detector) {
                *model = model.clone().with_threshold(t)?;
            }
            if let Detector::Linear { model, .. } = &detector {
                info!(
                    "linear: iterations={} grad_norm={:.3e} loss={:.6} degenerate={}",
                    model.meta.iterations, model.meta.final_grad_norm, model.meta.final_loss, model.meta.degenerate
                );
            }
            detector
        }
        DetectorKind::Gbdt => {
            let vectors: Vec<FeatureVector> = manifest.map_flights(|r| Ok(extract_features(&r)))?;
            let defaults = GbdtHyper::default();
            let hyper = GbdtHyper {
                n_trees: args.n_trees.unwrap_or(defaults.n_trees),
                learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
                max_leaves: args.max_leaves.unwrap_or(defaults.max_leaves),
                l2_leaf: args.l2.unwrap_or(defaults.l2_leaf),
                ..defaults
            };
            if args.threshold.is_some() {
                warn!("--threshold only applies to the linear model; gbdt uses 0.5");
            }
            let detector = Detector::train_gbdt(&vectors, &labels, hyper, args.seed)?;
            if let Detector::Gbdt { model, .. } = &detector {
                info!("gbdt: trees={} base_score={:.6}", model.trees.len(), model.base_score);
            }
            detector
        }
    };

    model_file::save(&detector, &args.out)?;
    writeln!(
        out,
        "kind={} flights={} positives={} model={}",
        detector.kind(),
        labels.len(),
        positives,
        args.out.display()
    )?;
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let detector = model_file::load(&args.model).with_context(|| format!("loading model {}", args.model.display()))?;
    let manifest = Manifest::read(&args.manifest)?;
    let scored = manifest.map_flights(|r| {
        let started = Instant::now();
        let p = detector.predict_flight(&r)?;
        let seconds = started.elapsed().as_secs_f64();
        Ok((
            FlightResult {
                flight_id: r.flight_id().to_string(),
                score: p.score,
                label: r.label().expect("manifest flights are labelled").as_u8(),
                predicted: p.label,
            },
            seconds,
        ))
    })?;
    let mean_seconds = scored.iter().map(|(_, s)| s).sum::<f64>() / scored.len().max(1) as f64;
    let report = EvaluationReport::from_results(scored.into_iter().map(|(r, _)| r).collect(), detector.threshold())?;

    writeln!(out, "{report}")?;
    writeln!(out, "mean_inference_seconds_per_flight={mean_seconds:.3e}")?;

    if let Some(path) = &args.report {
        let mut text = format!("model_kind={}\n", detector.kind());
        text.push_str(&report.to_key_value());
        text.push_str(&format!("mean_inference_seconds={mean_seconds:.3e}\n"));
        write_file(path, &text)?;
    }
    if let Some(path) = &args.scores {
        write_file(path, &report.flights_csv())?;
    }
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let detector = model_file::load(&args.model).with_context(|| format!("loading model {}", args.model.display()))?;
    let recording = parse_flight_csv(&args.flight)?;
    let p = detector.predict_flight(&recording)?;
    writeln!(out, "{},{},{}", recording.flight_id(), p.score, p.label)?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
