//! Run manifests written next to every output so a conversion can be
//! repeated exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RepresentationConfig;
use crate::events::{EventFormat, Frequency, PolarityConvention, SensorGeometry};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Emitted frames as a half-open range of window indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRange {
    pub first_window: u64,
    pub frames: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub input: PathBuf,
    pub format: EventFormat,
    pub polarity: PolarityConvention,
    pub geometry: SensorGeometry,
    pub frequency: Frequency,
    /// Window origin in microseconds.
    pub t0: i64,
    pub warm_up: usize,
    pub config: RepresentationConfig,
    pub output: PathBuf,
    pub frame_range: FrameRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json() + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(std::io::Error::from)
    }
}
