//! Synthetic flights with optional jamming.
//!
//! Each tracked satellite's C/No is
//!
//! ```text
//! nominal + A·sin(2πt/P + φ) + g_roll·roll + g_pitch·pitch + noise − jam(t)
//! ```
//!
//! with roll/pitch in radians and noise clipped to ±3σ. A jam lowers every
//! tracked channel by the same trapezoidal profile (linear ramp, plateau,
//! linear release of the same length as the ramp). Samples pushed below the
//! loss-of-track level become absent. Roll and pitch carry raised-cosine
//! manoeuvre pulses, which move individual satellites up or down according to
//! their coupling gains and are the main confounder for detection.
//!
//! Flight `i` draws from a ChaCha8 stream keyed by `(seed, i + 1)`; stream 0
//! selects which flights are jammed. Output is therefore independent of
//! generation order and thread count.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recording::{
    quantize, write_flight_csv, DenseChannels, FlightRecording, Label, Manifest, ManifestEntry, MaskedSeries,
    CNO_RANGE, NUM_CNO,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub n_flights: usize,
    pub jam_prevalence: f64,
    /// Flight length in seconds, inclusive.
    pub duration_range: [usize; 2],
    pub tracked_satellites_range: [usize; 2],
    /// dB-Hz
    pub nominal_cno_range: [f64; 2],
    /// dB
    pub noise_sigma: f64,
    /// dB per radian, drawn separately for roll and pitch per satellite.
    pub attitude_gain_range: [f64; 2],
    pub drift_amplitude_range: [f64; 2],
    /// Seconds.
    pub drift_period_range: [f64; 2],
    pub jam_depth_range: [f64; 2],
    pub jam_ramp_range: [usize; 2],
    pub jam_plateau_range: [usize; 2],
    /// Upper bound on roll/pitch excursions per flight.
    pub max_maneuvers: usize,
    /// Samples below this C/No are dropped (loss of track).
    pub loss_of_track_cno: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_flights: 100,
            jam_prevalence: 0.15,
            duration_range: [600, 2800],
            tracked_satellites_range: [8, 12],
            nominal_cno_range: [38.0, 45.0],
            noise_sigma: 0.7,
            attitude_gain_range: [-3.0, 3.0],
            drift_amplitude_range: [0.0, 2.0],
            drift_period_range: [14_400.0, 43_200.0],
            jam_depth_range: [3.0, 10.0],
            jam_ramp_range: [10, 120],
            jam_plateau_range: [60, 480],
            max_maneuvers: 3,
            loss_of_track_cno: 28.0,
        }
    }
}

/// Bounds of the raised-cosine attitude excursions, degrees and seconds.
const MANEUVER_ROLL_DEG: f64 = 30.0;
const MANEUVER_PITCH_DEG: f64 = 15.0;
const MANEUVER_DURATION_S: [usize; 2] = [20, 60];

fn check_range<T: PartialOrd + std::fmt::Debug>(name: &str, r: &[T; 2]) -> Result<()> {
    if r[0] <= r[1] {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: min {:?} exceeds max {:?}", r[0], r[1])))
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("duration_range", &self.duration_range)?;
        check_range("tracked_satellites_range", &self.tracked_satellites_range)?;
        check_range("nominal_cno_range", &self.nominal_cno_range)?;
        check_range("attitude_gain_range", &self.attitude_gain_range)?;
        check_range("drift_amplitude_range", &self.drift_amplitude_range)?;
        check_range("drift_period_range", &self.drift_period_range)?;
        check_range("jam_depth_range", &self.jam_depth_range)?;
        check_range("jam_ramp_range", &self.jam_ramp_range)?;
        check_range("jam_plateau_range", &self.jam_plateau_range)?;
        if !(0.0..=1.0).contains(&self.jam_prevalence) {
            return Err(Error::Config(format!("jam_prevalence {} not in [0, 1]", self.jam_prevalence)));
        }
        if self.duration_range[0] < 60 {
            return Err(Error::Config("duration_range minimum must be at least 60 s".into()));
        }
        if self.tracked_satellites_range[1] > NUM_CNO {
            return Err(Error::Config(format!("at most {NUM_CNO} satellites can be tracked")));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::Config("noise_sigma must be non-negative".into()));
        }
        if self.nominal_cno_range[0] < CNO_RANGE.0 || self.nominal_cno_range[1] > CNO_RANGE.1 {
            return Err(Error::Config("nominal_cno_range must lie within [0, 60]".into()));
        }
        if self.drift_amplitude_range[0] < 0.0 || self.drift_amplitude_range[1] > 2.0 {
            return Err(Error::Config("drift amplitude must lie in [0, 2] dB".into()));
        }
        if self.drift_period_range[0] < 300.0 {
            return Err(Error::Config("drift period must be at least 300 s".into()));
        }
        if self.jam_depth_range[0] <= 0.0 {
            return Err(Error::Config("jam depth must be positive".into()));
        }
        if self.jam_ramp_range[0] < 1 {
            return Err(Error::Config("jam ramp must be at least 1 s".into()));
        }
        if self.jam_prevalence > 0.0 && self.jam_ramp_range[0] + self.jam_plateau_range[0] > self.duration_range[0] {
            return Err(Error::Config("shortest jam does not fit in the shortest flight".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Number of jammed flights: `round(prevalence · n_flights)`.
    pub fn jammed_count(&self) -> usize {
        (self.jam_prevalence * self.n_flights as f64).round() as usize
    }
}

/// A common-mode C/No drop: linear ramp to `depth`, hold for `plateau`,
/// linear release over another `ramp` seconds (clipped at the end of the flight).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JammingEvent {
    pub start: usize,
    pub ramp: usize,
    pub plateau: usize,
    /// dB
    pub depth: f64,
}

impl JammingEvent {
    pub fn validate(&self, duration: usize) -> Result<()> {
        if self.ramp < 1 {
            return Err(Error::JamOutOfRange("ramp must be at least 1 s".into()));
        }
        if !(self.depth > 0.0) || !self.depth.is_finite() {
            return Err(Error::JamOutOfRange(format!("depth {} must be positive", self.depth)));
        }
        if self.start + self.ramp + self.plateau > duration {
            return Err(Error::JamOutOfRange(format!(
                "start {} + ramp {} + plateau {} exceeds {duration} epochs",
                self.start, self.ramp, self.plateau
            )));
        }
        Ok(())
    }

    /// First epoch of the plateau.
    pub fn plateau_start(&self) -> usize {
        self.start + self.ramp
    }

    /// One past the last plateau epoch.
    pub fn plateau_end(&self) -> usize {
        self.start + self.ramp + self.plateau
    }

    /// Attenuation in dB at epoch `t`.
    pub fn attenuation(&self, t: usize) -> f64 {
        let ramp = self.ramp as f64;
        if t < self.start {
            0.0
        } else if t < self.plateau_start() {
            self.depth * (t - self.start + 1) as f64 / ramp
        } else if t < self.plateau_end() {
            self.depth
        } else if t < self.plateau_end() + self.ramp {
            self.depth * (1.0 - (t - self.plateau_end() + 1) as f64 / ramp)
        } else {
            0.0
        }
    }
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn uniform_int(rng: &mut impl Rng, r: [usize; 2]) -> usize {
    rng.random_range(r[0]..=r[1])
}

/// Gaussian noise clipped to ±3σ.
struct ClippedNoise {
    normal: Option<Normal<f64>>,
    bound: f64,
}

impl ClippedNoise {
    fn new(sigma: f64) -> Self {
        Self {
            normal: (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma")),
            bound: 3.0 * sigma,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match &self.normal {
            Some(n) => n.sample(rng).clamp(-self.bound, self.bound),
            None => 0.0,
        }
    }
}

fn draw_duration(config: &SimulationConfig, rng: &mut impl Rng) -> usize {
    uniform_int(rng, config.duration_range)
}

/// Draws jam parameters that fit in a flight of `duration` epochs.
pub fn draw_jam(config: &SimulationConfig, duration: usize, rng: &mut impl Rng) -> JammingEvent {
    let depth = uniform(rng, config.jam_depth_range);
    let ramp = uniform_int(rng, config.jam_ramp_range).min(duration);
    let plateau_max = config.jam_plateau_range[1].min(duration - ramp);
    let plateau_min = config.jam_plateau_range[0].min(plateau_max);
    let plateau = uniform_int(rng, [plateau_min, plateau_max]);
    let start = uniform_int(rng, [0, duration - ramp - plateau]);
    JammingEvent {
        start,
        ramp,
        plateau,
        depth,
    }
}

/// Raised-cosine pulse contributions to roll and pitch (degrees).
fn maneuver_profile(config: &SimulationConfig, duration: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let mut roll = vec![0.0; duration];
    let mut pitch = vec![0.0; duration];
    let count = uniform_int(rng, [0, config.max_maneuvers]);
    for _ in 0..count {
        let len = uniform_int(rng, MANEUVER_DURATION_S).min(duration);
        let start = uniform_int(rng, [0, duration - len]);
        let roll_amp = uniform(rng, [-MANEUVER_ROLL_DEG, MANEUVER_ROLL_DEG]);
        let pitch_amp = uniform(rng, [-MANEUVER_PITCH_DEG, MANEUVER_PITCH_DEG]);
        for k in 0..len {
            let shape = 0.5 * (1.0 - (2.0 * PI * k as f64 / len as f64).cos());
            roll[start + k] += roll_amp * shape;
            pitch[start + k] += pitch_amp * shape;
        }
    }
    (roll, pitch)
}

struct Satellite {
    prn: usize,
    nominal: f64,
    drift_amplitude: f64,
    drift_period: f64,
    drift_phase: f64,
    roll_gain: f64,
    pitch_gain: f64,
}

/// Simulates one flight of a given duration.
pub fn simulate_flight_with_duration(
    config: &SimulationConfig,
    rng: &mut ChaCha8Rng,
    flight_id: &str,
    duration: usize,
    jam: Option<JammingEvent>,
) -> Result<FlightRecording> {
    config.validate()?;
    if duration == 0 {
        return Err(Error::Config("flight duration must be positive".into()));
    }
    if let Some(j) = &jam {
        j.validate(duration)?;
    }

    let (roll_pulses, pitch_pulses) = maneuver_profile(config, duration, rng);

    let roll_step = Normal::new(0.0, 0.3).expect("valid");
    let pitch_step = Normal::new(0.0, 0.15).expect("valid");
    let heading_step = Normal::new(0.0, 0.5).expect("valid");
    let speed_step = Normal::new(0.0, 0.5).expect("valid");
    let gs_noise = ClippedNoise::new(0.8);

    let pitch_trim = uniform(rng, [-3.0, 5.0]);
    let cruise = uniform(rng, [35.0, 70.0]);
    let wind = uniform(rng, [-12.0, 12.0]);
    let mut heading_state = uniform(rng, [0.0, 360.0]);
    let mut roll_state = 0.0;
    let mut pitch_state = 0.0;
    let mut speed_state = 0.0;

    let mut dense = DenseChannels {
        heading: Vec::with_capacity(duration),
        roll: Vec::with_capacity(duration),
        pitch: Vec::with_capacity(duration),
        ground_speed: Vec::with_capacity(duration),
        true_airspeed: Vec::with_capacity(duration),
    };
    for t in 0..duration {
        roll_state = 0.98 * roll_state + roll_step.sample(rng);
        pitch_state = 0.98 * pitch_state + pitch_step.sample(rng);
        speed_state = 0.95 * speed_state + speed_step.sample(rng);
        heading_state = (heading_state + heading_step.sample(rng)).rem_euclid(360.0);

        let roll = (roll_state + roll_pulses[t]).clamp(-180.0, 180.0);
        let pitch = (pitch_trim + pitch_state + pitch_pulses[t]).clamp(-90.0, 90.0);
        let tas = (cruise + speed_state).max(0.0);
        let gs = (tas + wind + gs_noise.sample(rng)).max(0.0);

        let mut heading = quantize(heading_state);
        if heading >= 360.0 {
            heading -= 360.0;
        }
        dense.heading.push(heading);
        dense.roll.push(quantize(roll));
        dense.pitch.push(quantize(pitch));
        dense.ground_speed.push(quantize(gs));
        dense.true_airspeed.push(quantize(tas));
    }

    let n_tracked = uniform_int(rng, config.tracked_satellites_range);
    let mut prns = sample(rng, NUM_CNO, n_tracked).into_vec();
    prns.sort_unstable();
    let satellites: Vec<Satellite> = prns
        .into_iter()
        .map(|prn| Satellite {
            prn,
            nominal: uniform(rng, config.nominal_cno_range),
            drift_amplitude: uniform(rng, config.drift_amplitude_range),
            drift_period: uniform(rng, config.drift_period_range),
            drift_phase: uniform(rng, [0.0, 2.0 * PI]),
            roll_gain: uniform(rng, config.attitude_gain_range),
            pitch_gain: uniform(rng, config.attitude_gain_range),
        })
        .collect();

    let noise = ClippedNoise::new(config.noise_sigma);
    let mut cno = vec![MaskedSeries::absent(duration); NUM_CNO];
    for sat in &satellites {
        let series = &mut cno[sat.prn];
        for t in 0..duration {
            let roll = dense.roll[t].to_radians();
            let pitch = dense.pitch[t].to_radians();
            let drift = sat.drift_amplitude * (2.0 * PI * t as f64 / sat.drift_period + sat.drift_phase).sin();
            let attenuation = jam.map_or(0.0, |j| j.attenuation(t));
            let value = sat.nominal + drift + sat.roll_gain * roll + sat.pitch_gain * pitch + noise.sample(rng)
                - attenuation;
            if value >= config.loss_of_track_cno {
                series.set(t, Some(quantize(value.min(CNO_RANGE.1))));
            }
        }
    }

    let label = if jam.is_some() { Label::Rfi } else { Label::Normal };
    FlightRecording::new(flight_id, (0..duration as u64).collect(), cno, dense, Some(label))
}

/// Simulates one flight, drawing its duration from `config` first.
pub fn simulate_flight(
    config: &SimulationConfig,
    rng: &mut ChaCha8Rng,
    flight_id: &str,
    jam: Option<JammingEvent>,
) -> Result<FlightRecording> {
    let duration = draw_duration(config, rng);
    simulate_flight_with_duration(config, rng, flight_id, duration, jam)
}

/// Deterministic generator for a whole synthetic dataset.
#[derive(Clone, Debug)]
pub struct FlightSimulator {
    config: SimulationConfig,
    jammed: Vec<bool>,
}

impl FlightSimulator {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_flights;
        let k = config.jammed_count().min(n);
        let mut rng = Self::stream(config.seed, 0);
        let mut jammed = vec![false; n];
        for i in sample(&mut rng, n, k) {
            jammed[i] = true;
        }
        Ok(Self { config, jammed })
    }

    fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn is_jammed(&self, index: usize) -> bool {
        self.jammed[index]
    }

    pub fn flight_id(index: usize) -> String {
        format!("F{index:05}")
    }

    /// Duration and jam of flight `index`, plus the rng positioned to simulate it.
    pub fn plan(&self, index: usize) -> (usize, Option<JammingEvent>, ChaCha8Rng) {
        let mut rng = Self::stream(self.config.seed, index as u64 + 1);
        let duration = draw_duration(&self.config, &mut rng);
        let jam = self.jammed[index].then(|| draw_jam(&self.config, duration, &mut rng));
        (duration, jam, rng)
    }

    pub fn flight(&self, index: usize) -> Result<FlightRecording> {
        let (duration, jam, mut rng) = self.plan(index);
        simulate_flight_with_duration(&self.config, &mut rng, &Self::flight_id(index), duration, jam)
    }

    /// Generates all flights in parallel and maps each through `f`, in index order.
    pub fn map_flights<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(FlightRecording) -> T + Sync + Send,
    {
        (0..self.config.n_flights)
            .into_par_iter()
            .map(|i| self.flight(i).map(&f))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    pub manifest: Manifest,
    pub n_flights: usize,
    pub n_jammed: usize,
    pub mean_duration: f64,
}

/// Writes every flight under `out_dir/flights/` and a `manifest.csv` listing them.
pub fn generate_dataset(config: &SimulationConfig, out_dir: impl AsRef<Path>) -> Result<GeneratedDataset> {
    let out_dir = out_dir.as_ref();
    let sim = FlightSimulator::new(config.clone())?;
    let flight_dir = out_dir.join("flights");
    fs::create_dir_all(&flight_dir).map_err(|e| Error::io(&flight_dir, e))?;

    let written: Vec<(ManifestEntry, usize)> = (0..config.n_flights)
        .into_par_iter()
        .map(|i| {
            let rec = sim.flight(i)?;
            let id = FlightSimulator::flight_id(i);
            let relative = PathBuf::from("flights").join(format!("{id}.csv"));
            write_flight_csv(&rec, out_dir.join(&relative))?;
            let label = rec.label().expect("simulated flights are labelled");
            Ok((
                ManifestEntry {
                    flight_id: id,
                    relative_path: relative,
                    label,
                },
                rec.len(),
            ))
        })
        .collect::<Result<_>>()?;

    let n_jammed = written.iter().filter(|(e, _)| e.label.is_positive()).count();
    let mean_duration = if written.is_empty() {
        0.0
    } else {
        written.iter().map(|(_, n)| *n as f64).sum::<f64>() / written.len() as f64
    };
    let manifest = Manifest {
        path: out_dir.join("manifest.csv"),
        entries: written.into_iter().map(|(e, _)| e).collect(),
    };
    manifest.write()?;
    Ok(GeneratedDataset {
        manifest,
        n_flights: config.n_flights,
        n_jammed,
        mean_duration,
    })
}
