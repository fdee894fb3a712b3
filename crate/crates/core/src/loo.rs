//! Leave-one-out retraining: the expensive ground truth that influence
//! scores approximate. For every training sample the model is retrained
//! without it (full-batch, tightly converged) and the realized change in
//! total validation loss is recorded. `n` retrains make this a desk-scale
//! audit tool, not a production path.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::influence::InfluenceReport;
use crate::model::{self, ModelSpec};
use crate::param::ParamVector;
use crate::trainer::{train_full_batch, FullBatchConfig};

/// The realized effect of removing one training sample:
/// `delta = sum_j [loss_j(theta) - loss_j(theta_without)]` over the
/// validation set, so positive means the removal helped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooDelta {
    pub id: u64,
    pub delta: f64,
    /// Whether the retrain reached the gradient tolerance; non-converged
    /// samples are excluded from comparisons.
    pub converged: bool,
}

/// Train to the optimum on the full set, then once more per left-out
/// sample (warm-started from the full optimum, which is exact for the
/// convex kinds since the optimum is unique). Returns the full-data
/// parameters and one delta per training sample.
pub fn loo_deltas(
    spec: &ModelSpec,
    train_set: &Dataset,
    val_set: &Dataset,
    optimizer: &FullBatchConfig,
) -> Result<(ParamVector, Vec<LooDelta>)> {
    let start = ParamVector::zeros(spec.param_count());
    let full = train_full_batch(spec, train_set, optimizer, &start)?;
    if !full.converged {
        return Err(Error::NotConverged {
            grad_norm: full.grad_norm,
            tol: optimizer.grad_tol,
        });
    }

    let base_loss = total_val_loss(spec, &full.params, val_set)?;
    let mut deltas = Vec::with_capacity(train_set.len());
    for i in 0..train_set.len() {
        let id = train_set.ids()[i];
        let reduced = train_set.without_ids(&[id].into_iter().collect())?;
        let retrained = train_full_batch(spec, &reduced, optimizer, &full.params)?;
        let delta = base_loss - total_val_loss(spec, &retrained.params, val_set)?;
        deltas.push(LooDelta { id, delta, converged: retrained.converged });
    }
    Ok((full.params, deltas))
}

fn total_val_loss(spec: &ModelSpec, params: &ParamVector, val_set: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for sample in val_set.iter() {
        total += model::data_loss(spec, params, &sample)?;
    }
    Ok(total)
}

/// How well influence totals track the realized deltas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooComparison {
    /// Spearman rank correlation over all converged pairs.
    pub spearman: f64,
    /// Fraction of sign matches among pairs with `|delta| > threshold`.
    pub sign_agreement: f64,
    /// Pairs entering the sign comparison.
    pub n_compared: usize,
    /// Converged pairs entering the rank correlation.
    pub n_ranked: usize,
    pub threshold: f64,
}

/// Match deltas to report scores by sample id; non-converged retrains are
/// dropped, and the sign comparison only counts deltas clear of optimizer
/// noise (`|delta| > threshold`).
pub fn compare_with_report(
    deltas: &[LooDelta],
    report: &InfluenceReport,
    threshold: f64,
) -> LooComparison {
    let totals: BTreeMap<u64, f64> = report
        .scores
        .iter()
        .map(|s| (s.sample_id, s.total))
        .collect();
    let mut scores = Vec::new();
    let mut realized = Vec::new();
    for d in deltas.iter().filter(|d| d.converged) {
        if let Some(&total) = totals.get(&d.id) {
            scores.push(total);
            realized.push(d.delta);
        }
    }
    let spearman_value = spearman(&scores, &realized);

    let mut agree = 0usize;
    let mut compared = 0usize;
    for (s, d) in scores.iter().zip(&realized) {
        if d.abs() > threshold {
            compared += 1;
            if (*s > 0.0) == (*d > 0.0) {
                agree += 1;
            }
        }
    }
    LooComparison {
        spearman: spearman_value,
        sign_agreement: if compared == 0 { 1.0 } else { agree as f64 / compared as f64 },
        n_compared: compared,
        n_ranked: scores.len(),
        threshold,
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman: length mismatch");
    if a.len() < 2 {
        return 1.0;
    }
    pearson(&ranks(a), &ranks(b))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut out = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[pos]] {
            end += 1;
        }
        let rank = (pos + end) as f64 / 2.0 + 1.0;
        for &idx in &order[pos..=end] {
            out[idx] = rank;
        }
        pos = end + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_blobs, Label, Provenance};

    #[test]
    fn spearman_basic_properties() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[5.0, 1.0, -2.0]) + 1.0).abs() < 1e-12);
        // monotone transform leaves rank correlation alone
        let a: [f64; 4] = [0.3, -1.0, 2.0, 0.7];
        let exp: Vec<f64> = a.iter().map(|x| x.exp()).collect();
        assert!((spearman(&a, &exp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[1.0, 2.0, 2.0, 5.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn two_sample_deltas_match_direct_recomputation() {
        let spec = ModelSpec::logistic(1, 0.1);
        let train = Dataset::new(
            "t",
            Provenance::Synthetic,
            1,
            vec![1.0, -1.0],
            vec![Label::Class(1), Label::Class(0)],
            vec![0, 1],
        )
        .unwrap();
        let val = Dataset::new(
            "v",
            Provenance::Synthetic,
            1,
            vec![0.5, -2.0],
            vec![Label::Class(1), Label::Class(0)],
            vec![0, 1],
        )
        .unwrap();
        let optimizer = FullBatchConfig::default();
        let (theta, deltas) = loo_deltas(&spec, &train, &val, &optimizer).unwrap();
        assert_eq!(deltas.len(), 2);

        // recompute each delta from scratch through the public pieces
        let base = total_val_loss(&spec, &theta, &val).unwrap();
        for d in &deltas {
            assert!(d.converged);
            let reduced = train.without_ids(&[d.id].into_iter().collect()).unwrap();
            let alone = train_full_batch(&spec, &reduced, &optimizer, &theta).unwrap();
            let expect = base - total_val_loss(&spec, &alone.params, &val).unwrap();
            assert!((d.delta - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_samples_have_matching_deltas() {
        let (blobs, _) = synth_blobs(8, 2, 2, 4.0, 0.0, 3).unwrap();
        // append an exact duplicate of row 0 with a fresh id
        let mut features: Vec<f64> = (0..blobs.len())
            .flat_map(|i| blobs.feature_row(i).to_vec())
            .collect();
        features.extend_from_slice(blobs.feature_row(0));
        let mut labels = blobs.labels().to_vec();
        labels.push(labels[0]);
        let mut ids = blobs.ids().to_vec();
        ids.push(100);
        let train =
            Dataset::new("dup", Provenance::Synthetic, 2, features, labels, ids).unwrap();
        let (val, _) = synth_blobs(6, 2, 2, 4.0, 0.0, 4).unwrap();

        let spec = ModelSpec::logistic(2, 0.1);
        let (_, deltas) = loo_deltas(&spec, &train, &val, &FullBatchConfig::default()).unwrap();
        let first = deltas.iter().find(|d| d.id == 0).unwrap();
        let copy = deltas.iter().find(|d| d.id == 100).unwrap();
        assert!(
            (first.delta - copy.delta).abs() < 1e-9,
            "{} vs {}",
            first.delta,
            copy.delta
        );
    }

    #[test]
    fn comparison_excludes_small_and_nonconverged() {
        let deltas = vec![
            LooDelta { id: 0, delta: 0.5, converged: true },
            LooDelta { id: 1, delta: -0.4, converged: true },
            LooDelta { id: 2, delta: 1e-12, converged: true }, // below threshold
            LooDelta { id: 3, delta: 2.0, converged: false },  // excluded entirely
        ];
        let report = InfluenceReport {
            scores: vec![
                crate::influence::InfluenceScore { sample_id: 0, total: 1.0, per_validation: None },
                crate::influence::InfluenceScore { sample_id: 1, total: -2.0, per_validation: None },
                crate::influence::InfluenceScore { sample_id: 2, total: 0.1, per_validation: None },
                crate::influence::InfluenceScore { sample_id: 3, total: -9.0, per_validation: None },
            ],
            ihvp_solve_count: 1,
            ihvp_residuals: vec![0.0],
            config_echo: crate::ihvp::IhvpConfig::default(),
            model_hash: "x".into(),
        };
        let cmp = compare_with_report(&deltas, &report, 1e-7);
        assert_eq!(cmp.n_ranked, 3);
        assert_eq!(cmp.n_compared, 2);
        assert_eq!(cmp.sign_agreement, 1.0);
    }
}
