//! Flight recordings: in-memory model, flight CSV files and dataset manifests.
//!
//! A flight file is plain CSV with one row per 1 Hz epoch:
//!
//! ```text
//! # flight_id=F00012,label=1
//! t,cno_01,...,cno_32,heading_deg,roll_deg,pitch_deg,gs_mps,tas_mps
//! 0,41.2031,,...
//! ```
//!
//! The leading `#` metadata line is optional. An empty C/No cell means the
//! satellite was not tracked at that epoch. The dense channels must be
//! populated on every row.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of C/No channels (one per GPS PRN slot).
pub const NUM_CNO: usize = 32;
/// Dense channels following the C/No block.
pub const NUM_DENSE: usize = 5;
/// Total model input channels.
pub const NUM_CHANNELS: usize = NUM_CNO + NUM_DENSE;

pub const HEADING: usize = NUM_CNO;
pub const ROLL: usize = NUM_CNO + 1;
pub const PITCH: usize = NUM_CNO + 2;
pub const GROUND_SPEED: usize = NUM_CNO + 3;
pub const TRUE_AIRSPEED: usize = NUM_CNO + 4;

/// Valid C/No interval in dB-Hz.
pub const CNO_RANGE: (f64, f64) = (0.0, 60.0);

/// Decimal places used when serialising channel values.
pub const DECIMALS: usize = 4;

const DENSE_COLUMNS: [&str; NUM_DENSE] = ["heading_deg", "roll_deg", "pitch_deg", "gs_mps", "tas_mps"];

/// CSV column name of a channel (`cno_01`..`cno_32`, `heading_deg`, ...).
pub fn channel_name(channel: usize) -> String {
    assert!(channel < NUM_CHANNELS, "channel index {channel} out of range");
    if channel < NUM_CNO {
        format!("cno_{:02}", channel + 1)
    } else {
        DENSE_COLUMNS[channel - NUM_CNO].to_string()
    }
}

/// The exact header row of a flight file.
pub fn csv_header() -> String {
    let mut header = String::from("t");
    for ch in 0..NUM_CHANNELS {
        header.push(',');
        header.push_str(&channel_name(ch));
    }
    header
}

/// Rounds to the serialised precision; the result survives a write/parse cycle bit-exactly.
pub fn quantize(value: f64) -> f64 {
    (value * 1e4).round() / 1e4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Rfi,
}

impl Label {
    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Label::Normal),
            1 => Some(Label::Rfi),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Rfi => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Rfi
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

fn parse_label(text: &str) -> Option<Label> {
    text.trim().parse::<u8>().ok().and_then(Label::from_u8)
}

/// A channel whose samples may be missing. Absent slots hold 0.0 in `values`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedSeries {
    values: Vec<f64>,
    present: Vec<bool>,
}

impl MaskedSeries {
    pub fn absent(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            present: vec![false; len],
        }
    }

    pub fn from_options(samples: &[Option<f64>]) -> Self {
        let mut series = Self::absent(samples.len());
        for (t, sample) in samples.iter().enumerate() {
            if let Some(v) = sample {
                series.values[t] = *v;
                series.present[t] = true;
            }
        }
        series
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        self.present[t].then(|| self.values[t])
    }

    pub fn set(&mut self, t: usize, value: Option<f64>) {
        match value {
            Some(v) => {
                self.values[t] = v;
                self.present[t] = true;
            }
            None => {
                self.values[t] = 0.0;
                self.present[t] = false;
            }
        }
    }

    pub fn n_present(&self) -> usize {
        self.present.iter().filter(|p| **p).count()
    }

    pub fn present_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.present)
            .filter_map(|(v, p)| p.then_some(*v))
    }
}

/// Attitude and speed channels; each must hold one finite value per epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseChannels {
    pub heading: Vec<f64>,
    pub roll: Vec<f64>,
    pub pitch: Vec<f64>,
    pub ground_speed: Vec<f64>,
    pub true_airspeed: Vec<f64>,
}

impl DenseChannels {
    fn get(&self, index: usize) -> &[f64] {
        match index {
            0 => &self.heading,
            1 => &self.roll,
            2 => &self.pitch,
            3 => &self.ground_speed,
            4 => &self.true_airspeed,
            _ => unreachable!("dense index {index}"),
        }
    }

    fn with_capacity(n: usize) -> Self {
        Self {
            heading: Vec::with_capacity(n),
            roll: Vec::with_capacity(n),
            pitch: Vec::with_capacity(n),
            ground_speed: Vec::with_capacity(n),
            true_airspeed: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, index: usize, value: f64) {
        match index {
            0 => self.heading.push(value),
            1 => self.roll.push(value),
            2 => self.pitch.push(value),
            3 => self.ground_speed.push(value),
            4 => self.true_airspeed.push(value),
            _ => unreachable!("dense index {index}"),
        }
    }
}

/// Checks a dense value against its physical domain. Returns a reason on failure.
fn check_dense(index: usize, value: f64) -> std::result::Result<(), String> {
    if !value.is_finite() {
        return Err(format!("gap in dense channel (value {value})"));
    }
    let ok = match index {
        0 => (0.0..360.0).contains(&value),
        1 => (-180.0..=180.0).contains(&value),
        2 => (-90.0..=90.0).contains(&value),
        _ => value >= 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("value {value} outside the valid domain"))
    }
}

fn check_cno(value: f64) -> std::result::Result<(), String> {
    if !value.is_finite() {
        return Err(format!("non-finite C/No value {value}"));
    }
    if value < CNO_RANGE.0 || value > CNO_RANGE.1 {
        return Err(format!(
            "C/No {value} outside [{}, {}] dB-Hz",
            CNO_RANGE.0, CNO_RANGE.1
        ));
    }
    Ok(())
}

fn check_flight_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c == ',' || c == '#' || c.is_control()) {
        return Err(Error::InvalidRecording(format!("invalid flight id {id:?}")));
    }
    Ok(())
}

/// One recorded flight: `T` epochs of 37 channels plus an optional flight-level label.
///
/// Immutable once constructed; construction validates every invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct FlightRecording {
    flight_id: String,
    epochs: Vec<u64>,
    cno: Vec<MaskedSeries>,
    dense: DenseChannels,
    label: Option<Label>,
}

impl FlightRecording {
    pub fn new(
        flight_id: impl Into<String>,
        epochs: Vec<u64>,
        cno: Vec<MaskedSeries>,
        dense: DenseChannels,
        label: Option<Label>,
    ) -> Result<Self> {
        let flight_id = flight_id.into();
        check_flight_id(&flight_id)?;
        let n = epochs.len();
        if n == 0 {
            return Err(Error::InvalidRecording("recording has no epochs".into()));
        }
        if epochs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRecording("epochs must be strictly increasing".into()));
        }
        if cno.len() != NUM_CNO {
            return Err(Error::InvalidRecording(format!(
                "expected {NUM_CNO} C/No channels, got {}",
                cno.len()
            )));
        }
        for (ch, series) in cno.iter().enumerate() {
            if series.len() != n {
                return Err(Error::InvalidRecording(format!(
                    "{} has {} samples, expected {n}",
                    channel_name(ch),
                    series.len()
                )));
            }
            for (t, v) in series.values.iter().enumerate() {
                if series.present[t] {
                    check_cno(*v).map_err(|m| {
                        Error::InvalidRecording(format!("{} at epoch {t}: {m}", channel_name(ch)))
                    })?;
                } else if *v != 0.0 {
                    return Err(Error::InvalidRecording("absent slot holds a value".into()));
                }
            }
        }
        for d in 0..NUM_DENSE {
            let values = dense.get(d);
            let name = channel_name(NUM_CNO + d);
            if values.len() != n {
                return Err(Error::InvalidRecording(format!(
                    "{name} has {} samples, expected {n}",
                    values.len()
                )));
            }
            for (t, v) in values.iter().enumerate() {
                check_dense(d, *v)
                    .map_err(|m| Error::InvalidRecording(format!("{name} at epoch {t}: {m}")))?;
            }
        }
        Ok(Self {
            flight_id,
            epochs,
            cno,
            dense,
            label,
        })
    }

    pub fn flight_id(&self) -> &str {
        &self.flight_id
    }

    pub fn epochs(&self) -> &[u64] {
        &self.epochs
    }

    /// Number of epochs `T`.
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn cno(&self, sat: usize) -> &MaskedSeries {
        &self.cno[sat]
    }

    pub fn dense(&self) -> &DenseChannels {
        &self.dense
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn with_flight_id(mut self, flight_id: impl Into<String>) -> Result<Self> {
        let id = flight_id.into();
        check_flight_id(&id)?;
        self.flight_id = id;
        Ok(self)
    }

    /// Value of `channel` at epoch index `t`, `None` when absent.
    pub fn value(&self, channel: usize, t: usize) -> Option<f64> {
        if channel < NUM_CNO {
            self.cno[channel].get(t)
        } else {
            Some(self.dense.get(channel - NUM_CNO)[t])
        }
    }

    /// All present values of a channel in epoch order.
    pub fn present_values(&self, channel: usize) -> Vec<f64> {
        if channel < NUM_CNO {
            self.cno[channel].present_values().collect()
        } else {
            self.dense.get(channel - NUM_CNO).to_vec()
        }
    }

    /// Satellites with at least one present sample.
    pub fn tracked_satellites(&self) -> Vec<usize> {
        (0..NUM_CNO).filter(|s| self.cno[*s].n_present() > 0).collect()
    }
}

fn parse_err(path: &Path, row: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

struct Metadata {
    flight_id: Option<String>,
    label: Option<Label>,
}

fn parse_metadata(path: &Path, line: &str) -> Result<Metadata> {
    let mut meta = Metadata {
        flight_id: None,
        label: None,
    };
    let body = line.trim_start_matches('#').trim();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| parse_err(path, 1, "#", format!("bad metadata entry {item:?}")))?;
        match key.trim() {
            "flight_id" => meta.flight_id = Some(value.trim().to_string()),
            "label" => {
                meta.label = Some(parse_label(value).ok_or_else(|| {
                    parse_err(path, 1, "#", format!("label {value:?} not in {{0,1}}"))
                })?)
            }
            other => return Err(parse_err(path, 1, "#", format!("unknown metadata key {other:?}"))),
        }
    }
    Ok(meta)
}

/// Parses a flight CSV from text. `path` is used for diagnostics and as the
/// fallback flight id (file stem) when no metadata line is present.
pub fn parse_flight_str(text: &str, path: &Path) -> Result<FlightRecording> {
    let (meta, body, line_offset) = match text.strip_prefix('#') {
        Some(_) => {
            let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
            (parse_metadata(path, first.trim_end_matches('\r'))?, rest, 1u64)
        }
        None => (
            Metadata {
                flight_id: None,
                label: None,
            },
            text,
            0u64,
        ),
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::None)
        .from_reader(body.as_bytes());

    let expected = csv_header();
    let header = reader.headers().map_err(|e| Error::Header {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let got = header.iter().collect::<Vec<_>>().join(",");
    if got.is_empty() {
        return Err(Error::Header {
            path: path.to_path_buf(),
            message: "file is empty".into(),
        });
    }
    if got != expected {
        let first_diff = expected
            .split(',')
            .zip(header.iter())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| header.len().min(NUM_CHANNELS + 1));
        return Err(Error::Header {
            path: path.to_path_buf(),
            message: format!(
                "expected {} columns starting `t,cno_01`; mismatch at column {}",
                NUM_CHANNELS + 1,
                first_diff + 1
            ),
        });
    }

    let mut epochs = Vec::new();
    let mut cno: Vec<Vec<Option<f64>>> = vec![Vec::new(); NUM_CNO];
    let mut dense = DenseChannels::with_capacity(0);

    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map(|p| p.line()).unwrap_or(0) + line_offset;
            parse_err(path, row, "*", e.to_string())
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0) + line_offset;

        let t_text = &record[0];
        let t: u64 = t_text
            .trim()
            .parse()
            .map_err(|_| parse_err(path, row, "t", format!("epoch {t_text:?} is not a non-negative integer")))?;
        epochs.push(t);

        for (sat, column) in cno.iter_mut().enumerate() {
            let cell = record[1 + sat].trim();
            if cell.is_empty() {
                column.push(None);
                continue;
            }
            let name = channel_name(sat);
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, row, &name, format!("non-numeric value {cell:?}")))?;
            check_cno(v).map_err(|m| parse_err(path, row, &name, m))?;
            column.push(Some(v));
        }

        for d in 0..NUM_DENSE {
            let name = DENSE_COLUMNS[d];
            let cell = record[1 + NUM_CNO + d].trim();
            if cell.is_empty() {
                return Err(parse_err(path, row, name, "gap in dense channel (empty cell)"));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, row, name, format!("non-numeric value {cell:?}")))?;
            check_dense(d, v).map_err(|m| parse_err(path, row, name, m))?;
            dense.push(d, v);
        }

        if epochs.len() >= 2 && epochs[epochs.len() - 1] <= epochs[epochs.len() - 2] {
            return Err(parse_err(path, row, "t", "epochs must be strictly increasing"));
        }
    }

    if epochs.is_empty() {
        return Err(parse_err(path, 2 + line_offset, "t", "file has no data rows (T = 0)"));
    }

    let flight_id = match meta.flight_id {
        Some(id) => id,
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "flight".into()),
    };
    let cno = cno.iter().map(|c| MaskedSeries::from_options(c)).collect();
    FlightRecording::new(flight_id, epochs, cno, dense, meta.label)
}

/// Reads and validates a flight CSV file.
pub fn parse_flight_csv(path: impl AsRef<Path>) -> Result<FlightRecording> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_flight_str(&text, path)
}

/// Serialises a recording to flight-CSV text with `DECIMALS` places.
pub fn format_flight_csv(recording: &FlightRecording) -> String {
    let n = recording.len();
    let mut out = String::with_capacity(64 + n * 40 * 8);
    match recording.label {
        Some(label) => {
            let _ = writeln!(out, "# flight_id={},label={}", recording.flight_id, label);
        }
        None => {
            let _ = writeln!(out, "# flight_id={}", recording.flight_id);
        }
    }
    out.push_str(&csv_header());
    out.push('\n');
    for t in 0..n {
        let _ = write!(out, "{}", recording.epochs[t]);
        for sat in 0..NUM_CNO {
            out.push(',');
            if let Some(v) = recording.cno[sat].get(t) {
                let _ = write!(out, "{:.*}", DECIMALS, v);
            }
        }
        for d in 0..NUM_DENSE {
            let _ = write!(out, ",{:.*}", DECIMALS, recording.dense.get(d)[t]);
        }
        out.push('\n');
    }
    out
}

pub fn write_flight_csv(recording: &FlightRecording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_flight_csv(recording);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub flight_id: String,
    /// Path as written in the manifest, relative to the manifest's directory.
    pub relative_path: PathBuf,
    pub label: Label,
}

/// The list of flights making up a dataset, read from `flight_id,relative_path,label` lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Manifest {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line == "flight_id,relative_path,label") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(line_no, format!("expected 3 fields, found {}", fields.len())));
            }
            let flight_id = fields[0].to_string();
            check_flight_id(&flight_id).map_err(|e| err(line_no, e.to_string()))?;
            let label = parse_label(fields[2])
                .ok_or_else(|| err(line_no, format!("label {:?} outside {{0,1}}", fields[2])))?;
            if !seen.insert(flight_id.clone()) {
                return Err(err(line_no, format!("duplicate flight_id {flight_id:?}")));
            }
            entries.push(ManifestEntry {
                flight_id,
                relative_path: PathBuf::from(fields[1]),
                label,
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.base_dir().join(&entry.relative_path)
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.flight_id, e.relative_path.display(), e.label);
        }
        out
    }

    pub fn write(&self) -> Result<()> {
        fs::write(&self.path, self.format()).map_err(|e| Error::io(&self.path, e))
    }

    /// Loads one entry, attaching the manifest id and label.
    pub fn load_entry(&self, entry: &ManifestEntry) -> Result<FlightRecording> {
        let file = self.resolve(entry);
        if !file.is_file() {
            return Err(Error::io(
                &file,
                std::io::Error::new(std::io::ErrorKind::NotFound, "flight file listed in manifest is missing"),
            )
            .in_flight(&entry.flight_id));
        }
        let rec = parse_flight_csv(&file).map_err(|e| e.in_flight(&entry.flight_id))?;
        if let Some(file_label) = rec.label() {
            if file_label != entry.label {
                return Err(Error::InvalidRecording(format!(
                    "file label {file_label} disagrees with manifest label {}",
                    entry.label
                ))
                .in_flight(&entry.flight_id));
            }
        }
        Ok(rec.with_flight_id(entry.flight_id.clone())?.with_label(Some(entry.label)))
    }

    /// Loads every flight in parallel and maps each through `f`, preserving manifest order.
    ///
    /// Only `f`'s outputs are retained, so large datasets can be reduced
    /// (e.g. to feature vectors) without holding all recordings at once.
    pub fn map_flights<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(FlightRecording) -> Result<T> + Sync + Send,
    {
        self.entries
            .par_iter()
            .map(|entry| {
                let id = entry.flight_id.clone();
                self.load_entry(entry).and_then(|r| f(r).map_err(|e| e.in_flight(&id)))
            })
            .collect()
    }
}

/// A fully loaded, labelled set of flights.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub recordings: Vec<FlightRecording>,
    pub manifest_path: PathBuf,
}

impl Dataset {
    pub fn new(recordings: Vec<FlightRecording>, manifest_path: impl Into<PathBuf>) -> Result<Self> {
        if recordings.is_empty() {
            return Err(Error::InvalidRecording("dataset contains no flights".into()));
        }
        let mut seen = HashSet::new();
        for r in &recordings {
            if !seen.insert(r.flight_id()) {
                return Err(Error::InvalidRecording(format!("duplicate flight_id {:?}", r.flight_id())));
            }
            if r.label().is_none() {
                return Err(Error::InvalidRecording(format!("flight {} has no label", r.flight_id())));
            }
        }
        Ok(Self {
            recordings,
            manifest_path: manifest_path.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.recordings.iter().map(|r| r.label().expect("dataset flights are labelled")).collect()
    }

    /// Fraction of flights labelled RFI.
    pub fn prevalence(&self) -> f64 {
        let pos = self.labels().iter().filter(|l| l.is_positive()).count();
        pos as f64 / self.len() as f64
    }
}

/// Parses every flight listed in a manifest; order follows the manifest.
pub fn load_dataset_manifest(path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest = Manifest::read(path.as_ref())?;
    let recordings = manifest.map_flights(Ok)?;
    Dataset::new(recordings, &manifest.path)
}
