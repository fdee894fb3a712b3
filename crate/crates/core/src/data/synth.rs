//! Synthetic Gaussian-blob classification data with optional planted label
//! noise. The planted flips give an end-to-end ground truth for "this
//! sample hurts validation loss".

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::{Dataset, Label, Provenance};
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, streams};

/// Which sample ids had their labels corrupted at generation time.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub flipped_ids: BTreeSet<u64>,
}

/// Gaussian class clusters (unit covariance) at seeded centers with pairwise
/// center distance >= `separation`, then `floor(flip_fraction * n)` samples
/// relabeled to a uniformly random wrong class.
///
/// Deterministic given `seed`. Class assignment cycles `0, 1, ..., classes-1`
/// so class sizes are balanced to within one sample.
pub fn synth_blobs(
    n: usize,
    input_dim: usize,
    classes: usize,
    separation: f64,
    flip_fraction: f64,
    seed: u64,
) -> Result<(Dataset, PlantedTruth)> {
    if n == 0 {
        return Err(Error::EmptyDataset("synthetic dataset"));
    }
    if classes < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    if classes > n {
        return Err(Error::InvalidConfig(format!(
            "classes ({classes}) may not exceed n ({n})"
        )));
    }
    if input_dim == 0 {
        return Err(Error::InvalidConfig("input_dim must be positive".into()));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::InvalidConfig("separation must be non-negative".into()));
    }

    let centers = place_centers(classes, input_dim, separation, seed)?;

    let mut sample_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::BLOB_SAMPLES));
    let mut features = Vec::with_capacity(n * input_dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        for center in &centers[class] {
            let z: f64 = StandardNormal.sample(&mut sample_rng);
            features.push(center + z);
        }
        labels.push(Label::Class(class));
    }
    let ids: Vec<u64> = (0..n as u64).collect();
    let dataset = Dataset::new(
        format!("blobs-n{n}-c{classes}"),
        Provenance::Synthetic,
        input_dim,
        features,
        labels,
        ids,
    )?;

    plant_label_noise(&dataset, flip_fraction, seed)
}

/// Relabel `floor(flip_fraction * n)` samples of a classification dataset to
/// a uniformly random wrong class, recording which ids were touched.
pub fn plant_label_noise(
    dataset: &Dataset,
    flip_fraction: f64,
    seed: u64,
) -> Result<(Dataset, PlantedTruth)> {
    if !(0.0..0.5).contains(&flip_fraction) {
        return Err(Error::InvalidConfig(format!(
            "flip_fraction must be in [0, 0.5), got {flip_fraction}"
        )));
    }
    let classes = dataset
        .class_count()
        .ok_or_else(|| Error::InvalidConfig("label noise requires class labels".into()))?;
    if classes < 2 && flip_fraction > 0.0 {
        return Err(Error::InvalidConfig(
            "cannot flip labels with fewer than 2 classes".into(),
        ));
    }

    let n = dataset.len();
    let n_flip = (flip_fraction * n as f64).floor() as usize;
    let mut flipped = PlantedTruth::default();
    let mut labels = dataset.labels().to_vec();

    if n_flip > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::LABEL_FLIPS));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let wrong = Uniform::new(0, classes - 1).expect("classes >= 2");
        for &i in order.iter().take(n_flip) {
            let current = labels[i].as_class().expect("classification labels");
            // uniform over the classes other than the current one
            let mut pick = wrong.sample(&mut rng);
            if pick >= current {
                pick += 1;
            }
            labels[i] = Label::Class(pick);
            flipped.flipped_ids.insert(dataset.ids()[i]);
        }
    }

    let noisy = Dataset::new(
        dataset.name().to_string(),
        dataset.provenance(),
        dataset.input_dim(),
        (0..n).flat_map(|i| dataset.feature_row(i).to_vec()).collect(),
        labels,
        dataset.ids().to_vec(),
    )?;
    Ok((noisy, flipped))
}

fn place_centers(
    classes: usize,
    input_dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::BLOB_CENTERS));
    let half = (separation.max(1.0)) * classes as f64;
    let coord = Uniform::new(-half, half).expect("finite bounds");
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(classes);
    let mut attempts = 0usize;
    while centers.len() < classes {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidConfig(format!(
                "could not place {classes} centers at separation {separation} in {input_dim}d"
            )));
        }
        let cand: Vec<f64> = (0..input_dim).map(|_| rng.sample(coord)).collect();
        let ok = centers.iter().all(|c| dist(c, &cand) >= separation);
        if ok {
            centers.push(cand);
        }
    }
    Ok(centers)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
