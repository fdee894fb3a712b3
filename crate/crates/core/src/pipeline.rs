//! The two-round flow: train on everything, score every training sample
//! against the validation set, drop the unfavorable ones in a single shot,
//! and retrain the same architecture from a fresh initialization on the
//! reduced set. Round-1 parameters exist only to compute scores; round 2
//! never sees them — there is deliberately no code path that feeds
//! `params_round1` into the second training run.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{save_checkpoint, split, CheckpointMeta, Dataset};
use crate::error::{Error, Result};
use crate::ihvp::IhvpConfig;
use crate::influence::{score_all_with, select_unfavorable, InfluenceReport, ScoreOptions};
use crate::model::ModelSpec;
use crate::param::ParamVector;
use crate::trainer::{evaluate, objective_spec, train, Metrics, TrainConfig};

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Fraction carved from the training set when no validation set is
    /// given (stratified for classifiers, held fixed across rounds).
    pub val_fraction: f64,
    /// Seed for the round-2 initialization; `None` reuses the round-1 seed
    /// so a no-op dropout reproduces round 1 bit for bit.
    pub round2_seed: Option<u64>,
    pub score: ScoreOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { val_fraction: 0.1, round2_seed: None, score: ScoreOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct TwoRoundResult {
    pub params_round1: ParamVector,
    pub report: InfluenceReport,
    pub dropped_ids: BTreeSet<u64>,
    pub params_round2: ParamVector,
    pub metrics_round1: Metrics,
    pub metrics_round2: Metrics,
    pub reduced_train_size: usize,
}

/// Train, score, drop, retrain. `validation` may be `None`, in which case a
/// split is carved from the training set before round 1 and held fixed.
/// Both rounds share the batch size, initialization scheme and (by default)
/// seed; round 2 trains from a fresh `init_params` call on the reduced set.
pub fn two_round(
    spec: &ModelSpec,
    train_set: &Dataset,
    validation: Option<&Dataset>,
    train_cfg: &TrainConfig,
    ihvp_cfg: &IhvpConfig,
) -> Result<TwoRoundResult> {
    two_round_with(spec, train_set, validation, train_cfg, ihvp_cfg, &PipelineOptions::default())
}

pub fn two_round_with(
    spec: &ModelSpec,
    train_set: &Dataset,
    validation: Option<&Dataset>,
    train_cfg: &TrainConfig,
    ihvp_cfg: &IhvpConfig,
    options: &PipelineOptions,
) -> Result<TwoRoundResult> {
    train_cfg.validate()?;
    ihvp_cfg.validate()?;
    let (train_set, val_set) = resolve_validation(train_set, validation, train_cfg, options)?;
    let spec = objective_spec(spec, train_cfg);
    let cfg1 = folded(train_cfg);

    let params_round1 = train(&spec, &train_set, &cfg1)?;
    let metrics_round1 = evaluate(&spec, &params_round1, &val_set)?;

    let report = score_all_with(&spec, &params_round1, &train_set, &val_set, ihvp_cfg, &options.score)?;
    let dropped_ids = select_unfavorable(&report);
    if dropped_ids.len() == train_set.len() {
        return Err(Error::EmptyReducedSet { report: Box::new(report) });
    }
    let reduced = train_set.without_ids(&dropped_ids)?;

    let cfg2 = TrainConfig { seed: options.round2_seed.unwrap_or(cfg1.seed), ..cfg1 };
    let params_round2 = train(&spec, &reduced, &cfg2)?;
    let metrics_round2 = evaluate(&spec, &params_round2, &val_set)?;

    Ok(TwoRoundResult {
        params_round1,
        report,
        dropped_ids,
        params_round2,
        metrics_round1,
        metrics_round2,
        reduced_train_size: reduced.len(),
    })
}

/// What one train-score-drop round produced.
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub round: usize,
    pub params: ParamVector,
    pub report: InfluenceReport,
    pub dropped: BTreeSet<u64>,
    pub metrics: Metrics,
    /// Training-set size the round started from.
    pub train_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigsEcho {
    pub train: TrainConfig,
    pub ihvp: IhvpConfig,
    pub rounds_requested: usize,
}

/// Unfavorable-sample counts per round of repeated train-score-drop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundCountSeries {
    pub counts: Vec<usize>,
    pub configs_echo: ConfigsEcho,
}

/// Repeated train-score-drop against a fixed validation split. Each round
/// trains from scratch (same seed policy as [`two_round`]) on the surviving
/// samples, scores them, and removes the positives in one shot. Stops early
/// when a round drops nothing.
pub fn multi_round(
    spec: &ModelSpec,
    train_set: &Dataset,
    validation: Option<&Dataset>,
    train_cfg: &TrainConfig,
    ihvp_cfg: &IhvpConfig,
    rounds: usize,
) -> Result<RoundCountSeries> {
    let outcomes = run_rounds(
        spec,
        train_set,
        validation,
        train_cfg,
        ihvp_cfg,
        rounds,
        &PipelineOptions::default(),
    )?;
    Ok(RoundCountSeries {
        counts: outcomes.iter().map(|o| o.dropped.len()).collect(),
        configs_echo: ConfigsEcho {
            train: train_cfg.clone(),
            ihvp: ihvp_cfg.clone(),
            rounds_requested: rounds,
        },
    })
}

/// The engine behind [`multi_round`], keeping the per-round parameters,
/// reports and metrics for callers that persist artifacts.
pub fn run_rounds(
    spec: &ModelSpec,
    train_set: &Dataset,
    validation: Option<&Dataset>,
    train_cfg: &TrainConfig,
    ihvp_cfg: &IhvpConfig,
    rounds: usize,
    options: &PipelineOptions,
) -> Result<Vec<RoundOutcome>> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be positive".into()));
    }
    train_cfg.validate()?;
    ihvp_cfg.validate()?;
    let (mut current, val_set) = resolve_validation(train_set, validation, train_cfg, options)?;
    let spec = objective_spec(spec, train_cfg);
    let cfg = folded(train_cfg);

    let mut outcomes: Vec<RoundOutcome> = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let train_size = current.len();
        let params = train(&spec, &current, &cfg)?;
        let metrics = evaluate(&spec, &params, &val_set)?;
        let report = score_all_with(&spec, &params, &current, &val_set, ihvp_cfg, &options.score)?;
        let dropped = select_unfavorable(&report);
        let emptied = dropped.len() == current.len();
        if emptied && round + 1 < rounds {
            return Err(Error::EmptyReducedSet { report: Box::new(report) });
        }
        let stop = dropped.is_empty() || emptied;
        if !stop {
            current = current.without_ids(&dropped)?;
        }
        outcomes.push(RoundOutcome { round, params, report, dropped, metrics, train_size });
        if stop {
            break;
        }
    }
    Ok(outcomes)
}

fn folded(cfg: &TrainConfig) -> TrainConfig {
    // the caller already moved weight decay into the spec's ridge
    TrainConfig { weight_decay: 0.0, ..cfg.clone() }
}

fn resolve_validation(
    train_set: &Dataset,
    validation: Option<&Dataset>,
    train_cfg: &TrainConfig,
    options: &PipelineOptions,
) -> Result<(Dataset, Dataset)> {
    match validation {
        Some(val) => Ok((train_set.clone(), val.clone())),
        None => split(
            train_set,
            options.val_fraction,
            train_cfg.seed,
            train_set.is_classification(),
        ),
    }
}

/// Paths produced by the run-directory writers, for manifests.
#[derive(Clone, Debug, Serialize)]
pub struct RunPaths {
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct MetricsSummary<'a> {
    n_train: usize,
    k_validation: usize,
    dropped: usize,
    reduced_train_size: usize,
    batch_size_round1: usize,
    batch_size_round2: usize,
    round1: &'a Metrics,
    round2: &'a Metrics,
}

/// Materialize a two-round run: both checkpoints, the influence report,
/// the dropped-id list and a metrics summary.
pub fn write_two_round_dir(
    dir: &Path,
    spec: &ModelSpec,
    train_cfg: &TrainConfig,
    result: &TwoRoundResult,
    train_checksum: &str,
) -> Result<RunPaths> {
    std::fs::create_dir_all(dir)?;
    let spec_eff = objective_spec(spec, train_cfg);
    let meta = |seed: u64| -> Result<CheckpointMeta> {
        Ok(CheckpointMeta {
            seed,
            config: serde_json::to_value(train_cfg)
                .map_err(|e| Error::Format(format!("config encode: {e}")))?,
            dataset_checksum: train_checksum.to_string(),
        })
    };
    let mut files = Vec::new();

    let round1 = dir.join("round1.ckpt");
    save_checkpoint(&round1, &spec_eff, &result.params_round1, &meta(train_cfg.seed)?)?;
    files.push(round1);

    let influence = dir.join("influence.jsonl");
    result.report.write_jsonl_file(&influence)?;
    files.push(influence);

    let dropped = dir.join("dropped_ids.txt");
    write_id_list(&dropped, &result.dropped_ids)?;
    files.push(dropped);

    let round2 = dir.join("round2.ckpt");
    save_checkpoint(&round2, &spec_eff, &result.params_round2, &meta(train_cfg.seed)?)?;
    files.push(round2);

    let metrics = dir.join("metrics.json");
    let summary = MetricsSummary {
        n_train: result.report.scores.len(),
        k_validation: result.report.ihvp_solve_count,
        dropped: result.dropped_ids.len(),
        reduced_train_size: result.reduced_train_size,
        batch_size_round1: train_cfg.batch_size,
        batch_size_round2: train_cfg.batch_size,
        round1: &result.metrics_round1,
        round2: &result.metrics_round2,
    };
    std::fs::write(
        &metrics,
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Format(format!("metrics encode: {e}")))?,
    )?;
    files.push(metrics);

    Ok(RunPaths { files })
}

/// Materialize a multi-round run: first-round artifacts, the final-round
/// checkpoint, the union of dropped ids, per-round metrics and the
/// plot-ready per-round counts CSV.
pub fn write_multi_round_dir(
    dir: &Path,
    spec: &ModelSpec,
    train_cfg: &TrainConfig,
    outcomes: &[RoundOutcome],
    train_checksum: &str,
) -> Result<RunPaths> {
    assert!(!outcomes.is_empty());
    std::fs::create_dir_all(dir)?;
    let spec_eff = objective_spec(spec, train_cfg);
    let meta = CheckpointMeta {
        seed: train_cfg.seed,
        config: serde_json::to_value(train_cfg)
            .map_err(|e| Error::Format(format!("config encode: {e}")))?,
        dataset_checksum: train_checksum.to_string(),
    };
    let mut files = Vec::new();

    let round1 = dir.join("round1.ckpt");
    save_checkpoint(&round1, &spec_eff, &outcomes[0].params, &meta)?;
    files.push(round1);

    let influence = dir.join("influence.jsonl");
    outcomes[0].report.write_jsonl_file(&influence)?;
    files.push(influence);

    let all_dropped: BTreeSet<u64> = outcomes.iter().flat_map(|o| o.dropped.iter().copied()).collect();
    let dropped = dir.join("dropped_ids.txt");
    write_id_list(&dropped, &all_dropped)?;
    files.push(dropped);

    let last = outcomes.last().expect("non-empty");
    let final_ckpt = dir.join("final.ckpt");
    save_checkpoint(&final_ckpt, &spec_eff, &last.params, &meta)?;
    files.push(final_ckpt);

    let counts = dir.join("rounds.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&counts)?);
    writeln!(w, "round,train_size,unfavorable")?;
    for o in outcomes {
        writeln!(w, "{},{},{}", o.round, o.train_size, o.dropped.len())?;
    }
    w.flush()?;
    files.push(counts);

    #[derive(Serialize)]
    struct RoundMetrics<'a> {
        round: usize,
        train_size: usize,
        dropped: usize,
        metrics: &'a Metrics,
    }
    let metrics = dir.join("metrics.json");
    let rows: Vec<RoundMetrics> = outcomes
        .iter()
        .map(|o| RoundMetrics {
            round: o.round,
            train_size: o.train_size,
            dropped: o.dropped.len(),
            metrics: &o.metrics,
        })
        .collect();
    std::fs::write(
        &metrics,
        serde_json::to_string_pretty(&rows)
            .map_err(|e| Error::Format(format!("metrics encode: {e}")))?,
    )?;
    files.push(metrics);

    Ok(RunPaths { files })
}

fn write_id_list(path: &Path, ids: &BTreeSet<u64>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for id in ids {
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    Ok(())
}
