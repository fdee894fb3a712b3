//! Influence scores: for every training sample, the predicted change in
//! total validation loss if that sample were removed.
//!
//! For a trained parameter vector the score of training sample `x` against
//! validation sample `x_j` is `-s_j . grad(x)` with
//! `s_j = (H + damping I)^{-1} grad(x_j)`; per-sample totals sum over the
//! validation set. A positive total predicts that dropping `x` lowers
//! validation loss.
//!
//! The expensive factor is `s_j`, so the scheduler fixes one `s_j` at a
//! time and sweeps all training gradients under it: exactly `k` inverse-HVP
//! solves for `k` validation samples, never `n * k`.
//!
//! Gradients on both sides are gradients of the per-sample data loss; the
//! ridge term belongs to the training objective, not to any one sample, so
//! it shows up in the Hessian only.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{to_hex, Dataset, Sample};
use crate::error::{Error, Result};
use crate::ihvp::{solve_cg, solve_lissa, IhvpConfig, IhvpMethod, IhvpResult};
use crate::model::{self, ModelSpec};
use crate::param::ParamVector;
use crate::seeding::streams;

/// One training sample's influence total, and optionally the per-validation
/// terms it sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceScore {
    pub sample_id: u64,
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_validation: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    /// One entry per training sample, in training-set order.
    pub scores: Vec<InfluenceScore>,
    /// Number of inverse-HVP solves scheduled: one per validation sample.
    pub ihvp_solve_count: usize,
    /// Post-hoc relative residual of each solve, in validation order.
    pub ihvp_residuals: Vec<f64>,
    pub config_echo: IhvpConfig,
    /// SHA-256 of the parameter bytes the report was computed against.
    pub model_hash: String,
}

/// Knobs that trade memory and wall time without changing results.
#[derive(Clone, Debug)]
pub struct ScoreOptions {
    /// Worker threads for the per-validation solves; 0 means sequential.
    /// Results are bit-identical for any worker count.
    pub workers: usize,
    /// Cache the `n` training gradients across the `k` passes. `None`
    /// enables the cache while `n * param_count <= 1e7` entries.
    pub cache_train_grads: Option<bool>,
    /// Keep the per-validation terms on every score record.
    pub keep_per_validation: bool,
    /// Re-solve with conjugate gradient when a stochastic solve diverges,
    /// keeping whichever residual is lower.
    pub cg_fallback: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            cache_train_grads: None,
            keep_per_validation: false,
            cg_fallback: true,
        }
    }
}

pub fn params_checksum(params: &ParamVector) -> String {
    to_hex(&Sha256::digest(params.to_le_bytes()))
}

/// `-(s . train_grad)`, the influence of one (training, validation) pair.
pub fn influence_pair(s: &ParamVector, train_grad: &ParamVector) -> Result<f64> {
    if s.len() != train_grad.len() {
        return Err(Error::ShapeMismatch {
            context: "influence pair",
            expected: s.len(),
            got: train_grad.len(),
        });
    }
    Ok(-s.dot(train_grad))
}

/// Solve for `s_j = (H + damping I)^{-1} grad(x_j)` for one validation
/// sample, under the configured method. A flagged (diverged) result is
/// returned as-is; callers decide whether to fall back.
pub fn s_vector(
    spec: &ModelSpec,
    params: &ParamVector,
    train_set: &Dataset,
    validation_sample: &Sample<'_>,
    config: &IhvpConfig,
) -> Result<IhvpResult> {
    let g = model::data_grad(spec, params, validation_sample)?;
    solve_for_gradient(spec, params, train_set, &g, config)
}

fn solve_for_gradient(
    spec: &ModelSpec,
    params: &ParamVector,
    train_set: &Dataset,
    g: &ParamVector,
    config: &IhvpConfig,
) -> Result<IhvpResult> {
    match config.method {
        IhvpMethod::Cg => solve_cg(
            |u| model::hvp(spec, params, train_set, u, config.damping),
            g,
            config,
        ),
        IhvpMethod::Lissa => solve_lissa(
            |indices, u| model::hvp_batch(spec, params, train_set, indices, u, 0.0),
            train_set.len(),
            g,
            config,
        ),
    }
}

/// Score every training sample against every validation sample.
///
/// Performs exactly `k` inverse-HVP solves (one per validation sample, each
/// independently seeded), then one pass over the `n` training gradients per
/// solve, accumulating totals in validation order so results do not depend
/// on scheduling.
pub fn score_all(
    spec: &ModelSpec,
    params: &ParamVector,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &IhvpConfig,
) -> Result<InfluenceReport> {
    score_all_with(spec, params, train_set, val_set, config, &ScoreOptions::default())
}

pub fn score_all_with(
    spec: &ModelSpec,
    params: &ParamVector,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &IhvpConfig,
    options: &ScoreOptions,
) -> Result<InfluenceReport> {
    spec.validate()?;
    config.validate()?;
    if !params.all_finite() {
        return Err(Error::NonFinite { context: "model parameters".into() });
    }
    let n = train_set.len();
    let k = val_set.len();

    // one scheduled solve per validation sample, counted at runtime; a
    // divergence fallback retries *within* the same scheduled solve
    let solve_counter = std::sync::atomic::AtomicUsize::new(0);
    let solve_one = |j: usize| -> Result<IhvpResult> {
        solve_counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let cfg_j = config.reseeded(streams::SCORE_SOLVE_BASE + j as u64);
        let g = model::data_grad(spec, params, &val_set.sample(j))?;
        let mut result = solve_for_gradient(spec, params, train_set, &g, &cfg_j)?;
        if result.diverged && options.cg_fallback {
            let mut cg_cfg = cfg_j.clone();
            cg_cfg.method = IhvpMethod::Cg;
            let fallback = solve_for_gradient(spec, params, train_set, &g, &cg_cfg)?;
            if fallback.residual <= result.residual {
                result = fallback;
            }
        }
        Ok(result)
    };

    let solves: Vec<Result<IhvpResult>> = if options.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            (0..k).into_par_iter().map(solve_one).collect()
        })
    } else {
        (0..k).map(solve_one).collect()
    };

    let mut s_vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (j, solve) in solves.into_iter().enumerate() {
        let result = solve?;
        if result.diverged {
            return Err(Error::IhvpDiverged {
                validation_index: j,
                residual: result.residual,
                solves_completed: j,
                total: k,
            });
        }
        residuals.push(result.residual);
        s_vectors.push(result.solution);
    }

    let cache = options
        .cache_train_grads
        .unwrap_or(n.saturating_mul(params.len()) <= 10_000_000);

    let mut totals = vec![0.0f64; n];
    let mut per_val: Option<Vec<Vec<f64>>> = options
        .keep_per_validation
        .then(|| vec![Vec::with_capacity(k); n]);

    let mut accumulate = |j: usize, i: usize, g_i: &ParamVector| {
        let term = -s_vectors[j].dot(g_i);
        totals[i] += term;
        if let Some(pv) = per_val.as_mut() {
            pv[i].push(term);
        }
    };

    if cache {
        let train_grads: Vec<ParamVector> = (0..n)
            .map(|i| model::data_grad(spec, params, &train_set.sample(i)))
            .collect::<Result<_>>()?;
        for j in 0..k {
            for (i, g_i) in train_grads.iter().enumerate() {
                accumulate(j, i, g_i);
            }
        }
    } else {
        for j in 0..k {
            for i in 0..n {
                let g_i = model::data_grad(spec, params, &train_set.sample(i))?;
                accumulate(j, i, &g_i);
            }
        }
    }

    let scores = (0..n)
        .map(|i| InfluenceScore {
            sample_id: train_set.ids()[i],
            total: totals[i],
            per_validation: per_val.as_mut().map(|pv| std::mem::take(&mut pv[i])),
        })
        .collect();

    let solve_count = solve_counter.into_inner();
    debug_assert_eq!(solve_count, k, "scheduler must solve exactly once per validation sample");
    Ok(InfluenceReport {
        scores,
        ihvp_solve_count: solve_count,
        ihvp_residuals: residuals,
        config_echo: config.clone(),
        model_hash: params_checksum(params),
    })
}

/// Ids whose total is strictly positive; exact zeros are kept.
pub fn select_unfavorable(report: &InfluenceReport) -> BTreeSet<u64> {
    report
        .scores
        .iter()
        .filter(|s| s.total > 0.0)
        .map(|s| s.sample_id)
        .collect()
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    k: usize,
    n: usize,
    solver: IhvpConfig,
    residuals: Vec<f64>,
    model_hash: String,
}

impl InfluenceReport {
    /// JSON-lines: a header record, then one record per training sample.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = JsonlHeader {
            k: self.ihvp_solve_count,
            n: self.scores.len(),
            solver: self.config_echo.clone(),
            residuals: self.ihvp_residuals.clone(),
            model_hash: self.model_hash.clone(),
        };
        writeln!(w, "{}", encode_json(&header)?)?;
        for score in &self.scores {
            writeln!(w, "{}", encode_json(score)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Format("empty influence report".into()))??;
        let header: JsonlHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::Format(format!("influence header: {e}")))?;
        let mut scores = Vec::with_capacity(header.n);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let score: InfluenceScore = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("influence record {}: {e}", idx + 2)))?;
            scores.push(score);
        }
        if scores.len() != header.n {
            return Err(Error::Format(format!(
                "influence report lists n = {} but has {} records",
                header.n,
                scores.len()
            )));
        }
        Ok(Self {
            scores,
            ihvp_solve_count: header.k,
            ihvp_residuals: header.residuals,
            config_echo: header.solver,
            model_hash: header.model_hash,
        })
    }

    pub fn write_jsonl_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_jsonl(std::io::BufWriter::new(file))
    }

    pub fn read_jsonl_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

fn encode_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Format(format!("encode: {e}")))
}
