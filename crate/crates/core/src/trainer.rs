//! Deterministic seeded training: minibatch SGD with momentum for the main
//! rounds, and a tightly converged full-batch descent used where a
//! well-defined optimum matters (leave-one-out retraining).
//!
//! Identical `(spec, dataset, config)` always produces bit-identical
//! parameters: initialization and the per-epoch shuffle each draw from their
//! own derived seed stream, and each training job is single-threaded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{self, ModelKind, ModelSpec};
use crate::param::ParamVector;
use crate::seeding::{derive_seed, streams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// Zero-mean normal weights with variance `2 / fan_in`; biases zero.
    ScaledNormalFanIn,
    /// Uniform weights on `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`;
    /// biases zero.
    ScaledUniformFanAvg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// `(epoch_start, learning_rate)` pairs, sorted, first entry at epoch 0.
    /// Applied at epoch boundaries only.
    pub lr_schedule: Vec<(usize, f64)>,
    pub momentum: f64,
    /// Extra ridge folded into the differentiable objective, so it shows up
    /// in gradients *and* Hessians. Training with `weight_decay = w` is
    /// identical to training the spec with `l2_reg + w`.
    pub weight_decay: f64,
    pub seed: u64,
    pub init: InitScheme,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            lr_schedule: vec![(0, 0.1)],
            momentum: 0.9,
            weight_decay: 0.0,
            seed: 0,
            init: InitScheme::ScaledNormalFanIn,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.lr_schedule.is_empty() || self.lr_schedule[0].0 != 0 {
            return bad("lr_schedule must start at epoch 0".into());
        }
        if !self.lr_schedule.windows(2).all(|w| w[0].0 < w[1].0) {
            return bad("lr_schedule epochs must be strictly increasing".into());
        }
        if !self.lr_schedule.iter().all(|(_, lr)| lr.is_finite() && *lr > 0.0) {
            return bad("learning rates must be positive".into());
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule
            .iter()
            .take_while(|(start, _)| *start <= epoch)
            .last()
            .map(|(_, lr)| *lr)
            .unwrap_or(self.lr_schedule[0].1)
    }

    pub fn with_constant_lr(mut self, lr: f64) -> Self {
        self.lr_schedule = vec![(0, lr)];
        self
    }
}

/// The model whose loss the trainer actually minimizes: the spec's ridge
/// plus the config's weight decay. Scoring and Hessians must use this same
/// spec or the influence math would differentiate a different objective
/// than the one trained.
pub fn objective_spec(spec: &ModelSpec, config: &TrainConfig) -> ModelSpec {
    spec.with_extra_l2(config.weight_decay)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean per-sample loss without the ridge term.
    pub mean_loss: f64,
    /// Argmax accuracy; present iff the model is a classifier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub n_evaluated: usize,
}

/// Seeded initial parameters: weights per the chosen scheme, biases zero.
pub fn init_params(spec: &ModelSpec, config: &TrainConfig) -> Result<ParamVector> {
    spec.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, streams::INIT));
    let mut values = Vec::with_capacity(spec.param_count());
    for (fan_in, fan_out) in spec.layers() {
        match config.init {
            InitScheme::ScaledNormalFanIn => {
                let std = (2.0 / fan_in as f64).sqrt();
                for _ in 0..fan_in * fan_out {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    values.push(std * z);
                }
            }
            InitScheme::ScaledUniformFanAvg => {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for _ in 0..fan_in * fan_out {
                    values.push(rng.random_range(-bound..bound));
                }
            }
        }
        values.extend(std::iter::repeat_n(0.0, fan_out));
    }
    Ok(ParamVector::from_vec(values))
}

/// Minibatch SGD with momentum over `epochs * ceil(n / batch_size)` steps.
/// The final batch of an epoch may be smaller than `batch_size`. Returns
/// the final parameters; aborts with the step index if the loss goes
/// non-finite.
pub fn train(spec: &ModelSpec, dataset: &Dataset, config: &TrainConfig) -> Result<ParamVector> {
    config.validate()?;
    let spec = objective_spec(spec, config);
    model::validate_dataset(&spec, dataset)?;

    let mut params = init_params(&spec, config)?;
    let mut velocity = ParamVector::zeros(params.len());
    let mut grad = ParamVector::zeros(params.len());
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        if config.shuffle {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed,
                streams::SHUFFLE_BASE + epoch as u64,
            ));
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            grad.as_mut_slice().fill(0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += scale
                    * model::dispatch_loss_grad_accum(
                        &spec,
                        &params,
                        &dataset.sample(i),
                        scale,
                        grad.as_mut_slice(),
                    );
            }
            grad.axpy(spec.l2_reg, &params);
            batch_loss += 0.5 * spec.l2_reg * params.dot(&params);
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { step });
            }
            velocity.scale(config.momentum);
            velocity.axpy(1.0, &grad);
            params.axpy(-lr, &velocity);
            step += 1;
        }
    }

    if !params.all_finite() {
        return Err(Error::TrainingDiverged { step });
    }
    Ok(params)
}

/// Mean data loss (no ridge term) and argmax accuracy for classifiers.
pub fn evaluate(spec: &ModelSpec, params: &ParamVector, dataset: &Dataset) -> Result<Metrics> {
    model::validate_dataset(spec, dataset)?;
    let n = dataset.len();
    let mut total = 0.0;
    let mut correct = 0usize;
    for sample in dataset.iter() {
        total += model::data_loss(spec, params, &sample)?;
        if spec.is_classifier() {
            let scores = model::class_scores(spec, params, sample.features)?;
            let predicted = argmax(&scores);
            if Some(predicted) == sample.label.as_class() {
                correct += 1;
            }
        }
    }
    Ok(Metrics {
        mean_loss: total / n as f64,
        accuracy: spec.is_classifier().then(|| correct as f64 / n as f64),
        n_evaluated: n,
    })
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Full-batch gradient descent with a fixed iteration budget and a tight
/// gradient-norm stop. Used where the *optimum* matters, not the path:
/// leave-one-out retraining needs every `theta_{-x}` pinned to tolerance or
/// the loss deltas drown in optimizer noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FullBatchConfig {
    pub max_iters: usize,
    /// Stop when the full-batch gradient norm falls below this.
    pub grad_tol: f64,
    /// Step size; `None` derives `1 / L` from a curvature bound (exact for
    /// the convex kinds, a power-iteration estimate for the MLP).
    pub lr: Option<f64>,
}

impl Default for FullBatchConfig {
    fn default() -> Self {
        Self { max_iters: 50_000, grad_tol: 1e-8, lr: None }
    }
}

#[derive(Clone, Debug)]
pub struct FullBatchOutcome {
    pub params: ParamVector,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Deterministic full-batch descent from `start`. For the convex kinds any
/// start reaches the unique optimum; warm starts just get there faster.
pub fn train_full_batch(
    spec: &ModelSpec,
    dataset: &Dataset,
    config: &FullBatchConfig,
    start: &ParamVector,
) -> Result<FullBatchOutcome> {
    model::validate_dataset(spec, dataset)?;
    if start.len() != spec.param_count() {
        return Err(Error::ShapeMismatch {
            context: "start params",
            expected: spec.param_count(),
            got: start.len(),
        });
    }
    if config.max_iters == 0 || !(config.grad_tol > 0.0) {
        return Err(Error::InvalidConfig(
            "full-batch training needs positive max_iters and grad_tol".into(),
        ));
    }
    let lr = match config.lr {
        Some(lr) if lr.is_finite() && lr > 0.0 => lr,
        Some(lr) => {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {lr}")))
        }
        None => 1.0 / curvature_bound(spec, dataset, start)?,
    };

    let n = dataset.len() as f64;
    let mut params = start.clone();
    let mut grad = ParamVector::zeros(params.len());
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..config.max_iters {
        grad.as_mut_slice().fill(0.0);
        for sample in dataset.iter() {
            model::dispatch_loss_grad_accum(spec, &params, &sample, 1.0 / n, grad.as_mut_slice());
        }
        grad.axpy(spec.l2_reg, &params);
        if !grad.all_finite() {
            return Err(Error::TrainingDiverged { step: it });
        }
        grad_norm = grad.norm();
        iterations = it;
        if grad_norm < config.grad_tol {
            return Ok(FullBatchOutcome { params, converged: true, iterations: it, grad_norm });
        }
        params.axpy(-lr, &grad);
    }
    Ok(FullBatchOutcome { params, converged: false, iterations, grad_norm })
}

/// An upper bound `L` on the spectral norm of the training Hessian, for the
/// default `1 / L` step size. Exact global bounds exist for the convex
/// kinds: each per-sample Hessian is dominated by `c * ||(x, 1)||^2` with
/// `c = 1` for squared error and `c = 1/2` for softmax cross-entropy.
fn curvature_bound(spec: &ModelSpec, dataset: &Dataset, at: &ParamVector) -> Result<f64> {
    let max_aug_norm = (0..dataset.len())
        .map(|i| {
            dataset
                .feature_row(i)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                + 1.0
        })
        .fold(0.0f64, f64::max);
    let data_bound = match spec.kind {
        ModelKind::LinearMse => max_aug_norm,
        ModelKind::Logistic | ModelKind::Softmax => 0.5 * max_aug_norm,
        ModelKind::Mlp => {
            // no global bound; estimate the top curvature at the start point
            // by power iteration and pad it
            let mut v = ParamVector::from_vec(vec![1.0; spec.param_count()]);
            v.scale(1.0 / v.norm());
            let mut lambda: f64 = 0.0;
            for _ in 0..30 {
                let hv = model::hvp(spec, at, dataset, &v, 0.0)?;
                lambda = v.dot(&hv).abs();
                let norm = hv.norm();
                if norm == 0.0 {
                    break;
                }
                v = hv;
                v.scale(1.0 / norm);
            }
            2.0 * lambda.max(0.5 * max_aug_norm)
        }
    };
    Ok(data_bound + spec.l2_reg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_blobs, split, Label, Provenance};

    fn tiny_linear() -> (ModelSpec, Dataset) {
        // exactly determined: w = 2, b = 1
        let spec = ModelSpec::linear_mse(1, 0.0);
        let ds = Dataset::new(
            "tiny",
            Provenance::Synthetic,
            1,
            vec![0.0, 2.0],
            vec![Label::Target(1.0), Label::Target(5.0)],
            vec![0, 1],
        )
        .unwrap();
        (spec, ds)
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let spec = ModelSpec::mlp(3, 2, 4, crate::model::Activation::Tanh, 0.0);
        let config = TrainConfig { seed: 5, ..Default::default() };
        let a = init_params(&spec, &config).unwrap();
        let b = init_params(&spec, &config).unwrap();
        assert_eq!(a, b);
        // bias slots: after W1 (12 entries) 4 biases, after W2 (8) 2 biases
        for i in 12..16 {
            assert_eq!(a[i], 0.0);
        }
        for i in 24..26 {
            assert_eq!(a[i], 0.0);
        }
        let other = init_params(&spec, &TrainConfig { seed: 6, ..Default::default() }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn linear_spec_biases_zero_any_seed() {
        let spec = ModelSpec::linear_mse(4, 0.0);
        for seed in [0u64, 1, 99, 12345] {
            let p = init_params(&spec, &TrainConfig { seed, ..Default::default() }).unwrap();
            assert_eq!(p[4], 0.0);
        }
    }

    #[test]
    fn init_variance_matches_scheme() {
        let spec = ModelSpec::mlp(8, 3, 64, crate::model::Activation::Relu, 0.0);
        let w1 = 0..8 * 64;
        let w2 = 8 * 64 + 64..8 * 64 + 64 + 64 * 3;
        for (scheme, var1, var2) in [
            (InitScheme::ScaledNormalFanIn, 2.0 / 8.0, 2.0 / 64.0),
            (InitScheme::ScaledUniformFanAvg, 2.0 / (8.0 + 64.0), 2.0 / (64.0 + 3.0)),
        ] {
            let mut sums = [0.0f64; 2];
            let mut sq = [0.0f64; 2];
            let mut counts = [0usize; 2];
            for seed in 0..10_000u64 {
                let p = init_params(&spec, &TrainConfig { seed, init: scheme, ..Default::default() })
                    .unwrap();
                for i in w1.clone() {
                    sums[0] += p[i];
                    sq[0] += p[i] * p[i];
                    counts[0] += 1;
                }
                for i in w2.clone() {
                    sums[1] += p[i];
                    sq[1] += p[i] * p[i];
                    counts[1] += 1;
                }
            }
            for (layer, target) in [(0usize, var1), (1, var2)] {
                let n = counts[layer] as f64;
                let mean = sums[layer] / n;
                let var = sq[layer] / n - mean * mean;
                assert!(
                    (var - target).abs() / target < 0.1,
                    "{scheme:?} layer {layer}: var {var} vs {target}"
                );
            }
        }
    }

    #[test]
    fn solves_exactly_determined_system() {
        let (spec, ds) = tiny_linear();
        let config = TrainConfig {
            epochs: 400,
            batch_size: 2,
            lr_schedule: vec![(0, 0.5)],
            momentum: 0.9,
            shuffle: false,
            ..Default::default()
        };
        let params = train(&spec, &ds, &config).unwrap();
        let m = evaluate(&spec, &params, &ds).unwrap();
        assert!(m.mean_loss < 1e-8, "loss {}", m.mean_loss);
        assert!((params[0] - 2.0).abs() < 1e-4);
        assert!((params[1] - 1.0).abs() < 1e-4);
        assert!(m.accuracy.is_none());
    }

    #[test]
    fn zero_epochs_returns_init() {
        let (spec, ds) = tiny_linear();
        let config = TrainConfig { epochs: 0, seed: 3, ..Default::default() };
        let trained = train(&spec, &ds, &config).unwrap();
        let init = init_params(&spec, &config).unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let (ds, _) = synth_blobs(60, 2, 3, 3.0, 0.1, 8).unwrap();
        let spec = ModelSpec::softmax(2, 3, 1e-3);
        let config = TrainConfig { epochs: 20, seed: 4, ..Default::default() };
        let a = train(&spec, &ds, &config).unwrap();
        let b = train(&spec, &ds, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let (ds, _) = synth_blobs(200, 2, 2, 8.0, 0.0, 21).unwrap();
        let spec = ModelSpec::logistic(2, 1e-3);
        let config = TrainConfig {
            epochs: 150,
            batch_size: 32,
            lr_schedule: vec![(0, 0.5)],
            seed: 2,
            ..Default::default()
        };
        let params = train(&spec, &ds, &config).unwrap();
        let m = evaluate(&spec, &params, &ds).unwrap();
        assert_eq!(m.accuracy, Some(1.0));
    }

    #[test]
    fn holdout_blobs_generalize() {
        let (ds, _) = synth_blobs(400, 2, 3, 8.0, 0.0, 33).unwrap();
        let (train_set, holdout) = split(&ds, 0.5, 9, true).unwrap();
        let spec = ModelSpec::softmax(2, 3, 1e-3);
        let config = TrainConfig { epochs: 120, seed: 1, ..Default::default() };
        let params = train(&spec, &train_set, &config).unwrap();
        let m = evaluate(&spec, &params, &holdout).unwrap();
        assert!(m.accuracy.unwrap() >= 0.95, "{m:?}");
    }

    #[test]
    fn evaluate_perfect_fit_is_exactly_zero() {
        let spec = ModelSpec::linear_mse(2, 0.0);
        let params = ParamVector::from_vec(vec![1.0, 0.0, 0.0]);
        let ds = Dataset::new(
            "fit",
            Provenance::Synthetic,
            2,
            vec![2.0, 3.0, -1.0, 0.5],
            vec![Label::Target(2.0), Label::Target(-1.0)],
            vec![0, 1],
        )
        .unwrap();
        let m = evaluate(&spec, &params, &ds).unwrap();
        assert_eq!(m.mean_loss, 0.0);
    }

    #[test]
    fn zero_params_balanced_binary_loss_is_ln2() {
        let spec = ModelSpec::logistic(2, 0.5); // ridge must not leak into evaluate
        let ds = Dataset::new(
            "bal",
            Provenance::Synthetic,
            2,
            vec![1.0, 2.0, -1.0, 0.5, 3.0, -2.0, 0.0, 1.0],
            vec![Label::Class(0), Label::Class(1), Label::Class(0), Label::Class(1)],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let m = evaluate(&spec, &ParamVector::zeros(spec.param_count()), &ds).unwrap();
        assert!((m.mean_loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(m.n_evaluated, 4);
    }

    #[test]
    fn one_step_difference_is_the_removed_samples_contribution() {
        let (ds, _) = synth_blobs(10, 2, 2, 3.0, 0.0, 14).unwrap();
        let spec = ModelSpec::logistic(2, 0.01);
        let config = TrainConfig {
            epochs: 1,
            batch_size: 10, // full batch
            lr_schedule: vec![(0, 0.2)],
            momentum: 0.0,
            shuffle: false,
            seed: 77,
            ..Default::default()
        };
        let theta_full = train(&spec, &ds, &config).unwrap();

        let removed: std::collections::BTreeSet<u64> = [3u64].into_iter().collect();
        let reduced = ds.without_ids(&removed).unwrap();
        let mut cfg_small = config.clone();
        cfg_small.batch_size = 9;
        let theta_small = train(&spec, &reduced, &cfg_small).unwrap();

        // both start at the same init; after one step they differ by
        // lr * (mean grad over D - mean grad over D \ {x}) at the init
        let init = init_params(&spec, &config).unwrap();
        let mean_grad = |set: &Dataset| {
            let mut g = ParamVector::zeros(init.len());
            for s in set.iter() {
                g.axpy(1.0 / set.len() as f64, &model::grad(&spec, &init, &s).unwrap());
            }
            g
        };
        let mut expected_diff = mean_grad(&ds);
        expected_diff.axpy(-1.0, &mean_grad(&reduced));
        expected_diff.scale(-0.2);
        for i in 0..init.len() {
            let got = theta_full[i] - theta_small[i];
            assert!(
                (got - expected_diff[i]).abs() < 1e-12,
                "coordinate {i}: {got} vs {}",
                expected_diff[i]
            );
        }
    }

    #[test]
    fn lr_schedule_switches_at_epoch_boundaries() {
        let config = TrainConfig {
            lr_schedule: vec![(0, 0.2), (2, 0.05)],
            ..Default::default()
        };
        assert_eq!(config.lr_at(0), 0.2);
        assert_eq!(config.lr_at(1), 0.2);
        assert_eq!(config.lr_at(2), 0.05);
        assert_eq!(config.lr_at(10), 0.05);

        // replicate two epochs by hand on a one-sample problem
        let (spec, _) = tiny_linear();
        let ds = Dataset::new(
            "one",
            Provenance::Synthetic,
            1,
            vec![1.0],
            vec![Label::Target(2.0)],
            vec![0],
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 2,
            batch_size: 1,
            lr_schedule: vec![(0, 0.1), (1, 0.3)],
            momentum: 0.0,
            shuffle: false,
            seed: 50,
            ..Default::default()
        };
        let got = train(&spec, &ds, &config).unwrap();
        let mut theta = init_params(&spec, &config).unwrap();
        for lr in [0.1, 0.3] {
            let g = model::grad(&spec, &theta, &ds.sample(0)).unwrap();
            theta.axpy(-lr, &g);
        }
        assert_eq!(got, theta);
    }

    #[test]
    fn weight_decay_matches_explicit_ridge() {
        let (ds, _) = synth_blobs(40, 2, 2, 4.0, 0.0, 5).unwrap();
        // values exact in binary so the folded ridge is bit-identical
        let base = ModelSpec::logistic(2, 0.25);
        let decayed = TrainConfig { epochs: 15, weight_decay: 0.5, seed: 9, ..Default::default() };
        let explicit = ModelSpec::logistic(2, 0.75);
        let plain = TrainConfig { epochs: 15, weight_decay: 0.0, seed: 9, ..Default::default() };
        assert_eq!(
            train(&base, &ds, &decayed).unwrap(),
            train(&explicit, &ds, &plain).unwrap()
        );
    }

    #[test]
    fn full_batch_descent_converges_on_convex_instance() {
        let (ds, _) = synth_blobs(30, 3, 2, 4.0, 0.0, 61).unwrap();
        let spec = ModelSpec::logistic(3, 0.05);
        let start = ParamVector::zeros(spec.param_count());
        let out = train_full_batch(&spec, &ds, &FullBatchConfig::default(), &start).unwrap();
        assert!(out.converged, "grad norm {}", out.grad_norm);
        assert!(out.grad_norm < 1e-8);
        // warm start from the optimum converges immediately
        let again = train_full_batch(&spec, &ds, &FullBatchConfig::default(), &out.params).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn config_validation_rules() {
        let mut c = TrainConfig::default();
        c.batch_size = 0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.momentum = 1.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.lr_schedule = vec![(1, 0.1)];
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.lr_schedule = vec![(0, 0.1), (0, 0.2)];
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.lr_schedule = vec![(0, -0.1)];
        assert!(c.validate().is_err());
    }

    #[test]
    fn non_finite_loss_aborts_with_step_index() {
        // a huge learning rate on steep data overflows the quadratic
        let spec = ModelSpec::linear_mse(1, 0.0);
        let ds = Dataset::new(
            "steep",
            Provenance::Synthetic,
            1,
            vec![1e8, -1e8],
            vec![Label::Target(1.0), Label::Target(-1.0)],
            vec![0, 1],
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 50,
            batch_size: 2,
            lr_schedule: vec![(0, 1e10)],
            shuffle: false,
            ..Default::default()
        };
        match train(&spec, &ds, &config) {
            Err(Error::TrainingDiverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
