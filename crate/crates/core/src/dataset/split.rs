//! Leakage-free grouped k-fold assignment.
//!
//! Folds partition *groups* (patient-days), never individual recordings, so
//! acoustically similar same-day clips cannot land on both sides of a split.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};

/// One cross-validation fold over the manifest's training records.
#[derive(Debug, Clone)]
pub struct Fold {
    pub fold: usize,
    /// Groups held out for validation in this fold.
    pub validation_groups: BTreeSet<String>,
    /// Indices into `manifest.records` used for training.
    pub train_indices: Vec<usize>,
    /// Indices into `manifest.records` held out for validation.
    pub validation_indices: Vec<usize>,
}

/// Partition the manifest's training groups into `fold_count` folds,
/// deterministically for the manifest seed.
pub fn grouped_kfold(manifest: &DatasetManifest) -> Result<Vec<Fold>> {
    let k = manifest.fold_count;
    if k < 2 {
        return Err(Error::Config(format!("fold_count must be >= 2, got {k}")));
    }

    let mut groups: Vec<String> = manifest
        .records_in(Split::Train)
        .map(|(_, r)| r.group_key.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if groups.len() < k {
        return Err(Error::InvalidInput(format!(
            "need at least {k} distinct training groups, found {}",
            groups.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);
    groups.shuffle(&mut rng);

    let mut folds: Vec<Fold> = (0..k)
        .map(|fold| Fold {
            fold,
            validation_groups: BTreeSet::new(),
            train_indices: Vec::new(),
            validation_indices: Vec::new(),
        })
        .collect();
    for (i, group) in groups.into_iter().enumerate() {
        folds[i % k].validation_groups.insert(group);
    }

    for fold in &mut folds {
        for (idx, rec) in manifest.records_in(Split::Train) {
            if fold.validation_groups.contains(&rec.group_key) {
                fold.validation_indices.push(idx);
            } else {
                fold.train_indices.push(idx);
            }
        }
    }
    Ok(folds)
}
