//! Versioned, checksummed text container for trained detectors.
//!
//! ```text
//! GNSS-RFI-MODEL
//! version=1.0
//! kind=gbdt
//! sha256=<hex digest of "kind=gbdt\n" followed by the payload>
//!
//! { ...JSON payload... }
//! ```
//!
//! The payload embeds the standardiser (and, for boosted models, the bin
//! table) so a model file alone is enough to score raw flights.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::{Detector, DetectorKind};
use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::gbdt::BoostedModel;
use crate::linear::LinearModel;
use crate::range::RangeModel;

pub const MAGIC: &str = "GNSS-RFI-MODEL";
pub const FORMAT_MAJOR: u32 = 1;
pub const FORMAT_MINOR: u32 = 0;

#[derive(Serialize, Deserialize)]
struct RangePayload {
    range: RangeModel,
}

#[derive(Serialize, Deserialize)]
struct LinearPayload {
    standardizer: Standardizer,
    linear: LinearModel,
}

#[derive(Serialize, Deserialize)]
struct GbdtPayload {
    standardizer: Standardizer,
    gbdt: BoostedModel,
}

fn checksum(kind: DetectorKind, payload: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("kind={kind}\n").as_bytes());
    hasher.update(payload.as_bytes());
    hex::encode(hasher.finalize())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::ModelFormat(e.to_string())
}

pub fn to_string(detector: &Detector) -> Result<String> {
    let payload = match detector {
        Detector::Range(range) => serde_json::to_string_pretty(&RangePayload { range: range.clone() }),
        Detector::Linear { standardizer, model } => serde_json::to_string_pretty(&LinearPayload {
            standardizer: standardizer.clone(),
            linear: model.clone(),
        }),
        Detector::Gbdt { standardizer, model } => serde_json::to_string_pretty(&GbdtPayload {
            standardizer: standardizer.clone(),
            gbdt: model.clone(),
        }),
    }
    .map_err(json_err)?;
    let kind = detector.kind();
    Ok(format!(
        "{MAGIC}\nversion={FORMAT_MAJOR}.{FORMAT_MINOR}\nkind={kind}\nsha256={}\n\n{payload}\n",
        checksum(kind, &format!("{payload}\n"))
    ))
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix(key))
        .and_then(|l| l.strip_prefix('='))
        .ok_or_else(|| Error::ModelFormat(format!("missing `{key}=` header line")))
}

pub fn from_str(text: &str) -> Result<Detector> {
    let (head, payload) = text
        .split_once("\n\n")
        .ok_or_else(|| Error::ModelFormat("missing blank line after header".into()))?;
    let mut lines = head.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = header_value(lines.next(), "version")?;
    let major: u32 = version
        .split('.')
        .next()
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| Error::ModelFormat(format!("bad version {version:?}")))?;
    if major != FORMAT_MAJOR {
        return Err(Error::UnsupportedVersion {
            found: version.to_string(),
            supported: FORMAT_MAJOR,
        });
    }
    let kind: DetectorKind = header_value(lines.next(), "kind")?.parse()?;
    let expected = header_value(lines.next(), "sha256")?;
    let computed = checksum(kind, payload);
    if expected != computed {
        return Err(Error::ChecksumMismatch {
            expected: expected.to_string(),
            computed,
        });
    }
    Ok(match kind {
        DetectorKind::Range => {
            let p: RangePayload = serde_json::from_str(payload).map_err(json_err)?;
            Detector::Range(p.range)
        }
        DetectorKind::Linear => {
            let p: LinearPayload = serde_json::from_str(payload).map_err(json_err)?;
            Detector::Linear {
                standardizer: p.standardizer,
                model: p.linear,
            }
        }
        DetectorKind::Gbdt => {
            let p: GbdtPayload = serde_json::from_str(payload).map_err(json_err)?;
            Detector::Gbdt {
                standardizer: p.standardizer,
                model: p.gbdt,
            }
        }
    })
}

pub fn save(detector: &Detector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(detector)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Detector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}
