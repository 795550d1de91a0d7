//! Manifest file I/O and group-key derivation.
//!
//! The manifest is a tab-separated text file, one record per line:
//!
//! ```text
//! # lungsed manifest v1	folds=5	seed=7
//! clip.wav	clip_label.txt	group_key	train
//! ```

use std::path::{Path, PathBuf};

use crate::dataset::{DatasetManifest, RecordingRecord, Split};
use crate::error::{Error, Result};

const HEADER_PREFIX: &str = "# lungsed manifest v1";

/// Derive the leakage group for a recording from its file stem.
///
/// Preferred form is `<patient-id>_<date>` metadata encoded in the name;
/// without explicit metadata the stem up to the last auscultation-location
/// token (`L1`..`L8`) is used, and a trailing numeric round token is dropped
/// as a fallback. This approximates the same-patient-same-day rule for the
/// public database's naming variants.
pub fn derive_group_key(stem: &str) -> String {
    let tokens: Vec<&str> = stem.split('_').collect();
    let is_location = |t: &str| {
        t.len() == 2 && t.starts_with('L') && t[1..].chars().all(|c| c.is_ascii_digit())
    };
    if let Some(pos) = tokens.iter().rposition(|t| is_location(t)) {
        if pos > 0 {
            return tokens[..pos].join("_");
        }
    }
    if tokens.len() > 1 && tokens.last().is_some_and(|t| t.chars().all(|c| c.is_ascii_digit())) {
        return tokens[..tokens.len() - 1].join("_");
    }
    stem.to_string()
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let mut out = format!(
        "{HEADER_PREFIX}\tfolds={}\tseed={}\n",
        manifest.fold_count, manifest.seed
    );
    let mut records: Vec<&RecordingRecord> = manifest.records.iter().collect();
    records.sort_by(|a, b| a.clip_path.cmp(&b.clip_path));
    for rec in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            rec.clip_path.display(),
            rec.label_path.display(),
            rec.group_key,
            rec.split.token()
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty manifest".into()))?;
    if !header.starts_with(HEADER_PREFIX) {
        return Err(Error::InvalidInput("missing manifest header".into()));
    }
    let mut fold_count = 5usize;
    let mut seed = 0u64;
    for field in header.split('\t').skip(1) {
        if let Some(v) = field.strip_prefix("folds=") {
            fold_count = v
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad folds field {v:?}")))?;
        } else if let Some(v) = field.strip_prefix("seed=") {
            seed = v
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad seed field {v:?}")))?;
        }
    }

    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "manifest line {}: expected 4 tab-separated fields",
                idx + 2
            )));
        }
        let split = Split::from_token(fields[3]).ok_or_else(|| {
            Error::InvalidInput(format!("manifest line {}: unknown split {:?}", idx + 2, fields[3]))
        })?;
        records.push(RecordingRecord {
            clip_path: PathBuf::from(fields[0]),
            label_path: PathBuf::from(fields[1]),
            group_key: fields[2].to_string(),
            split,
        });
    }
    DatasetManifest::new(records, fold_count, seed)
}

/// Build a manifest by pairing `<name>.wav` with `<name>_label.txt` under a
/// directory tree. Splits start unassigned.
pub fn scan_directory(root: &Path) -> Result<Vec<RecordingRecord>> {
    let mut records = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::InvalidInput(format!("walk {}: {e}", root.display())))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("wav") {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_string(),
            None => continue,
        };
        let label_path = path.with_file_name(format!("{stem}_label.txt"));
        if !label_path.exists() {
            continue;
        }
        records.push(RecordingRecord {
            clip_path: path.to_path_buf(),
            label_path,
            group_key: derive_group_key(&stem),
            split: Split::Unassigned,
        });
    }
    Ok(records)
}

/// Assign train/test splits group-wise: groups are shuffled by seed and
/// moved into the test split until it holds at least `test_fraction` of the
/// records.
pub fn assign_splits(records: &mut [RecordingRecord], test_fraction: f64, seed: u64) -> Result<()> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!(
            "test_fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    let mut groups: Vec<String> = records
        .iter()
        .map(|r| r.group_key.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let group_size = |g: &str| records.iter().filter(|r| r.group_key == g).count();
    let target = (records.len() as f64 * test_fraction).round() as usize;
    let mut test_groups = std::collections::BTreeSet::new();
    let mut covered = 0usize;
    for g in groups {
        if covered >= target {
            break;
        }
        covered += group_size(&g);
        test_groups.insert(g);
    }
    for rec in records.iter_mut() {
        rec.split = if test_groups.contains(&rec.group_key) {
            Split::Test
        } else {
            Split::Train
        };
    }
    Ok(())
}
