//! Recordings, labels, per-frame targets, splits, and synthetic data.

mod labels;
mod manifest;
mod split;
mod synth;
mod targets;
mod wav;

pub use labels::{derive_cas_labels, format_label_file, parse_label_file};
pub use manifest::{assign_splits, derive_group_key, read_manifest, scan_directory, write_manifest};
pub use split::{grouped_kfold, Fold};
pub use synth::{synthesize_dataset, synthesize_recording, SynthesisSpec};
pub use targets::make_segment_targets;
pub use wav::{encode_wav, parse_wav, read_wav_file, truncate_clip, write_wav_file};

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Required sampling rate for every recording.
pub const SAMPLE_RATE: u32 = 4000;
/// Standard clip duration after truncation.
pub const CLIP_SECONDS: f64 = 15.0;
/// Sample count of a standard clip (15 s × 4000 Hz).
pub const CLIP_SAMPLES: usize = 60_000;

/// Recording device family, inferred from the filename prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceTag {
    /// Electronic stethoscope recordings (`steth_` prefix).
    Steth,
    /// Truncated multichannel device recordings (`trunc_` prefix).
    Trunc,
}

/// 15 s of mono 4 kHz audio, decoded from signed 16-bit PCM and scaled to
/// [-1, 1) by dividing by 32768.
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_id: String,
    pub device_tag: DeviceTag,
}

impl AudioClip {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Sound event classes. `W`, `S`, and `R` combine into the derived class `C`;
/// `C` never appears in raw label files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Klass {
    /// Inhalation.
    I,
    /// Exhalation.
    E,
    /// Wheeze.
    W,
    /// Stridor.
    S,
    /// Rhonchus.
    R,
    /// Discontinuous adventitious sound (crackles).
    D,
    /// Continuous adventitious sound, derived as the union of W, S, and R.
    C,
}

impl Klass {
    pub fn token(self) -> &'static str {
        match self {
            Klass::I => "I",
            Klass::E => "E",
            Klass::W => "W",
            Klass::S => "S",
            Klass::R => "R",
            Klass::D => "D",
            Klass::C => "C",
        }
    }

    pub fn from_token(token: &str) -> Option<Klass> {
        match token {
            "I" => Some(Klass::I),
            "E" => Some(Klass::E),
            "W" => Some(Klass::W),
            "S" => Some(Klass::S),
            "R" => Some(Klass::R),
            "D" => Some(Klass::D),
            "C" => Some(Klass::C),
            _ => None,
        }
    }

    /// True for the classes that fold into the derived CAS class.
    pub fn is_cas_component(self) -> bool {
        matches!(self, Klass::W | Klass::S | Klass::R)
    }

    /// The four detection task classes.
    pub fn tasks() -> [Klass; 4] {
        [Klass::I, Klass::E, Klass::C, Klass::D]
    }
}

impl std::fmt::Display for Klass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// A labeled time interval within a 15-s recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub klass: Klass,
    pub start: f64,
    pub end: f64,
}

impl LabelEvent {
    pub fn new(klass: Klass, start: f64, end: f64) -> Result<Self> {
        if !(0.0..CLIP_SECONDS).contains(&start) || !(start < end) || end > CLIP_SECONDS {
            return Err(Error::InvalidInput(format!(
                "label interval [{start}, {end}] violates 0 <= start < end <= {CLIP_SECONDS}"
            )));
        }
        Ok(LabelEvent { klass, start, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Dataset partition assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
    Unassigned,
}

impl Split {
    pub fn token(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }

    pub fn from_token(token: &str) -> Option<Split> {
        match token {
            "train" => Some(Split::Train),
            "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            "unassigned" => Some(Split::Unassigned),
            _ => None,
        }
    }
}

/// One recording with its label file, leakage group, and split assignment.
///
/// All records sharing a `group_key` must carry the same split; recordings
/// from one patient-day stay together.
#[derive(Debug, Clone)]
pub struct RecordingRecord {
    pub clip_path: PathBuf,
    pub label_path: PathBuf,
    pub group_key: String,
    pub split: Split,
}

/// The full dataset listing plus cross-validation parameters.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub records: Vec<RecordingRecord>,
    pub fold_count: usize,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn new(records: Vec<RecordingRecord>, fold_count: usize, seed: u64) -> Result<Self> {
        let manifest = DatasetManifest {
            records,
            fold_count,
            seed,
        };
        manifest.check_group_consistency()?;
        Ok(manifest)
    }

    /// Every group key must map to exactly one split.
    fn check_group_consistency(&self) -> Result<()> {
        let mut seen: std::collections::HashMap<&str, Split> = std::collections::HashMap::new();
        for rec in &self.records {
            match seen.insert(rec.group_key.as_str(), rec.split) {
                Some(prev) if prev != rec.split => {
                    return Err(Error::InvalidInput(format!(
                        "group {} spans multiple splits",
                        rec.group_key
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = (usize, &RecordingRecord)> {
        self.records
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.split == split)
    }
}

/// Per-frame binary targets for one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTargets {
    pub klass: Klass,
    pub values: Vec<u8>,
}

impl SegmentTargets {
    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    pub fn active_frames(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }
}
