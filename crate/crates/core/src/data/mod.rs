//! Dataset ingestion, splitting, synthetic generation and persistence.

mod checkpoint;
mod csv_io;
mod idx;
mod synth;

pub use checkpoint::{load_checkpoint, save_checkpoint, sidecar_path, CheckpointMeta, CHECKPOINT_MAGIC};
pub use csv_io::{load_csv, save_csv, CsvSchema, LabelKind};
pub use idx::load_idx;
pub use synth::{plant_label_noise, synth_blobs, PlantedTruth};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, streams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Csv,
    Idx,
    Synthetic,
}

/// A sample's target: a class index for classifiers, a real target for
/// regression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Class(usize),
    Target(f64),
}

impl Label {
    pub fn as_class(&self) -> Option<usize> {
        match self {
            Label::Class(c) => Some(*c),
            Label::Target(_) => None,
        }
    }

    pub fn as_target(&self) -> Option<f64> {
        match self {
            Label::Target(t) => Some(*t),
            Label::Class(_) => None,
        }
    }
}

/// Borrowed view of one sample: a feature row, its label and its stable id.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub id: u64,
    pub features: &'a [f64],
    pub label: Label,
}

/// An in-memory dataset: an `n x input_dim` feature matrix, one label per
/// row and strictly increasing stable ids.
///
/// Datasets are never empty; every constructor and transformation upholds
/// that, so downstream numeric code can divide by `len()` freely.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    provenance: Provenance,
    input_dim: usize,
    features: Vec<f64>, // row-major, n * input_dim
    labels: Vec<Label>,
    ids: Vec<u64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        provenance: Provenance,
        input_dim: usize,
        features: Vec<f64>,
        labels: Vec<Label>,
        ids: Vec<u64>,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyDataset("dataset"));
        }
        if features.len() != n * input_dim {
            return Err(Error::ShapeMismatch {
                context: "feature matrix",
                expected: n * input_dim,
                got: features.len(),
            });
        }
        if ids.len() != n {
            return Err(Error::ShapeMismatch {
                context: "ids",
                expected: n,
                got: ids.len(),
            });
        }
        if !ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "sample ids must be strictly increasing".into(),
            ));
        }
        if !features.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset features".into(),
            });
        }
        let all_class = labels.iter().all(|l| matches!(l, Label::Class(_)));
        let all_target = labels.iter().all(|l| matches!(l, Label::Target(_)));
        if !(all_class || all_target) {
            return Err(Error::InvalidConfig(
                "labels must be all class indices or all real targets".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            provenance,
            input_dim,
            features,
            labels,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            id: self.ids[i],
            features: self.feature_row(i),
            label: self.labels[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Sample<'_>> {
        (0..self.len()).map(move |i| self.sample(i))
    }

    pub fn is_classification(&self) -> bool {
        matches!(self.labels[0], Label::Class(_))
    }

    /// Number of classes implied by the labels (max index + 1), if this is
    /// a classification dataset.
    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .iter()
            .map(|l| l.as_class())
            .collect::<Option<Vec<_>>>()
            .map(|cs| cs.iter().max().map_or(0, |m| m + 1))
    }

    /// A new dataset with the given row order, re-using original ids.
    /// `indices` must be sorted so that ids stay strictly increasing.
    fn take_sorted(&self, indices: &[usize], name: String) -> Dataset {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let mut features = Vec::with_capacity(indices.len() * self.input_dim);
        let mut labels = Vec::with_capacity(indices.len());
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.feature_row(i));
            labels.push(self.labels[i]);
            ids.push(self.ids[i]);
        }
        Dataset {
            name,
            provenance: self.provenance,
            input_dim: self.input_dim,
            features,
            labels,
            ids,
        }
    }

    /// The dropout rebuild: every sample whose id is in `drop` removed,
    /// survivors kept in their original relative order.
    pub fn without_ids(&self, drop: &BTreeSet<u64>) -> Result<Dataset> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !drop.contains(&self.ids[i]))
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyDataset("reduced training set"));
        }
        Ok(self.take_sorted(&keep, self.name.clone()))
    }

    /// SHA-256 over dims, features, labels and ids; stable across runs.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.input_dim as u64).to_le_bytes());
        for x in &self.features {
            h.update(x.to_le_bytes());
        }
        for l in &self.labels {
            match l {
                Label::Class(c) => {
                    h.update([0u8]);
                    h.update((*c as u64).to_le_bytes());
                }
                Label::Target(t) => {
                    h.update([1u8]);
                    h.update(t.to_le_bytes());
                }
            }
        }
        for id in &self.ids {
            h.update(id.to_le_bytes());
        }
        to_hex(&h.finalize())
    }
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Split a dataset into disjoint (train, validation) parts.
///
/// The validation side gets `round(val_fraction * n)` samples (per class in
/// stratified mode, which keeps class proportions within one sample). Both
/// sides keep original ids in increasing order. Deterministic given `seed`.
pub fn split(
    dataset: &Dataset,
    val_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&val_fraction) || val_fraction <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "val_fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    if stratified && !dataset.is_classification() {
        return Err(Error::InvalidConfig(
            "stratified split requires class labels".into(),
        ));
    }
    let n = dataset.len();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::SPLIT));

    let mut val_indices: Vec<usize> = Vec::new();
    if stratified {
        let classes = dataset.class_count().unwrap_or(0);
        let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
        for i in 0..n {
            per_class[dataset.labels()[i].as_class().unwrap()].push(i);
        }
        for members in per_class.iter_mut() {
            members.shuffle(&mut rng);
            let take = (val_fraction * members.len() as f64).round() as usize;
            val_indices.extend_from_slice(&members[..take.min(members.len())]);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let take = (val_fraction * n as f64).round() as usize;
        val_indices.extend_from_slice(&order[..take.min(n)]);
    }

    if val_indices.is_empty() || val_indices.len() >= n {
        return Err(Error::InvalidConfig(format!(
            "val_fraction {val_fraction} leaves an empty side for n = {n}"
        )));
    }

    val_indices.sort_unstable();
    let in_val: BTreeSet<usize> = val_indices.iter().copied().collect();
    let train_indices: Vec<usize> = (0..n).filter(|i| !in_val.contains(i)).collect();

    let train = dataset.take_sorted(&train_indices, format!("{}-train", dataset.name));
    let val = dataset.take_sorted(&val_indices, format!("{}-val", dataset.name));
    Ok((train, val))
}

/// Per-feature affine transform fitted on the training split only.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    /// Fit mean and standard deviation per feature column. Columns with
    /// zero spread get std 1 so they map to zero instead of NaN.
    pub fn fit(train: &Dataset) -> Self {
        let d = train.input_dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; d];
        for i in 0..train.len() {
            for (m, x) in mean.iter_mut().zip(train.feature_row(i)) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for i in 0..train.len() {
            for j in 0..d {
                let dx = train.feature_row(i)[j] - mean[j];
                var[j] += dx * dx;
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.input_dim() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                context: "standardizer",
                expected: self.mean.len(),
                got: dataset.input_dim(),
            });
        }
        let d = dataset.input_dim();
        let mut features = Vec::with_capacity(dataset.len() * d);
        for i in 0..dataset.len() {
            for j in 0..d {
                features.push((dataset.feature_row(i)[j] - self.mean[j]) / self.std[j]);
            }
        }
        Dataset::new(
            dataset.name.clone(),
            dataset.provenance,
            d,
            features,
            dataset.labels.clone(),
            dataset.ids.clone(),
        )
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }
}
