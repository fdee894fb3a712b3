//! `datadrop` — train a model, score every training sample's influence on
//! validation loss, drop the harmful ones, retrain from scratch.
//!
//! Exit codes: 0 success, 1 configuration/input error, 2 numeric or runtime
//! failure, 3 self-test failure.

mod commands;
mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self { code: 1, message }
    }

    pub fn numeric(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn from_core(e: datadrop::Error) -> Self {
        use datadrop::Error::*;
        let code = match &e {
            ShapeMismatch { .. } | InvalidSpec(_) | InvalidConfig(_) | EmptyDataset(_)
            | LabelOutOfRange { .. } | WrongLabelKind { .. } | Malformed { .. } | Format(_)
            | Io(_) => 1,
            NonFinite { .. } | TrainingDiverged { .. } | NotConverged { .. }
            | IhvpDiverged { .. } | EmptyReducedSet { .. } => 2,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "datadrop", version, about = "Influence-guided training-set pruning")]
struct Cli {
    /// JSON config file; command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score training samples against a validation set with a trained
    /// checkpoint.
    Score(ScoreArgs),
    /// The full train / score / drop / retrain flow.
    TwoRound(TwoRoundArgs),
    /// Leave-one-out retraining audit: realized validation-loss deltas next
    /// to influence scores.
    LooOracle(LooArgs),
    /// Numeric self-tests (gradients, Hessian-vector products, solvers).
    Check(CheckArgs),
}

/// Flags shared by the training-capable commands; every one of them
/// overrides the config file.
#[derive(Args)]
pub struct SharedFlags {
    /// Model descriptor, e.g. `logistic:in=2`, `softmax:in=4,out=3,l2=0.05`,
    /// `mlp:in=8,out=3,hidden=16,act=relu`.
    #[arg(long)]
    spec: Option<String>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Constant learning rate (config files may give a full schedule).
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Ridge coefficient; overrides the spec descriptor's `l2`.
    #[arg(long)]
    l2_reg: Option<f64>,
    /// `scaled-normal-fan-in` or `scaled-uniform-fan-avg`.
    #[arg(long)]
    init: Option<String>,
    /// Disable the per-epoch shuffle.
    #[arg(long)]
    no_shuffle: bool,
    /// Inverse-HVP method: `cg` or `lissa`.
    #[arg(long)]
    ihvp: Option<String>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    lissa_depth: Option<usize>,
    #[arg(long)]
    lissa_scale: Option<f64>,
    #[arg(long)]
    lissa_repeats: Option<usize>,
    #[arg(long)]
    lissa_batch: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Validation fraction carved from the training set when no --val-data
    /// is given.
    #[arg(long)]
    val_fraction: Option<f64>,
    /// Worker threads for the scoring phase (never changes results).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV label column name.
    #[arg(long)]
    label_col: Option<String>,
}

impl SharedFlags {
    fn common(&self) -> config::CommonFlags {
        config::CommonFlags {
            spec: self.spec.clone(),
            seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            l2_reg: self.l2_reg,
            init: self.init.clone(),
            no_shuffle: self.no_shuffle,
            ihvp: self.ihvp.clone(),
            damping: self.damping,
            cg_tol: self.cg_tol,
            lissa_depth: self.lissa_depth,
            lissa_scale: self.lissa_scale,
            lissa_repeats: self.lissa_repeats,
            lissa_batch: self.lissa_batch,
            rounds: self.rounds,
            val_fraction: self.val_fraction,
            workers: self.workers,
            label_col: self.label_col.clone(),
        }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training data: a CSV path, `idx:IMAGES,LABELS`, or `synth:blobs,...`.
    #[arg(long, required = true)]
    data: String,
    #[arg(long, required = true)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
    #[command(flatten)]
    shared: SharedFlags,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long, required = true)]
    checkpoint: PathBuf,
    #[arg(long, required = true)]
    train_data: String,
    #[arg(long, required = true)]
    val_data: String,
    #[arg(long, required = true)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
    /// Keep the per-validation influence terms on every record.
    #[arg(long)]
    per_validation: bool,
    #[command(flatten)]
    shared: SharedFlags,
}

#[derive(Args)]
pub struct TwoRoundArgs {
    #[arg(long, required = true)]
    data: String,
    /// Held-out validation data; omitted means a split is carved from
    /// --data.
    #[arg(long)]
    val_data: Option<String>,
    #[arg(long, required = true)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
    #[command(flatten)]
    shared: SharedFlags,
}

#[derive(Args)]
pub struct LooArgs {
    #[arg(long, required = true)]
    data: String,
    #[arg(long)]
    val_data: Option<String>,
    #[arg(long, required = true)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
    /// Refuse more than this many retrains without --force.
    #[arg(long, default_value_t = 500)]
    max_samples: usize,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    shared: SharedFlags,
}

#[derive(Args)]
pub struct CheckArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Optional output directory for the results record and manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force one check to fail (test hook).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Accumulates what the manifest needs while a command runs.
#[derive(Default)]
pub struct Ctx {
    pub out_dir: Option<PathBuf>,
    pub config_snapshot: serde_json::Value,
    pub input_checksums: BTreeMap<String, String>,
    pub output_paths: Vec<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's rendering, but with the documented config-error code
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };

    let start = Instant::now();
    let mut ctx = Ctx::default();
    let command_name = match &cli.command {
        Cmd::Train(_) => "train",
        Cmd::Score(_) => "score",
        Cmd::TwoRound(_) => "two-round",
        Cmd::LooOracle(_) => "loo-oracle",
        Cmd::Check(_) => "check",
    };

    let result = (|| -> Result<(), CliError> {
        let file = config::FileConfig::load(cli.config.as_deref())?;
        match &cli.command {
            Cmd::Train(args) => commands::train(args, &file, &mut ctx),
            Cmd::Score(args) => commands::score(args, &file, &mut ctx),
            Cmd::TwoRound(args) => commands::two_round(args, &file, &mut ctx),
            Cmd::LooOracle(args) => commands::loo_oracle(args, &file, &mut ctx),
            Cmd::Check(args) => commands::check(args, &mut ctx),
        }
    })();

    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };

    if let Some(dir) = ctx.out_dir.clone() {
        let manifest = manifest::RunManifest {
            command: command_name.to_string(),
            config_snapshot: ctx.config_snapshot.clone(),
            input_checksums: ctx.input_checksums.clone(),
            output_paths: ctx.output_paths.clone(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            exit_status: code,
        };
        if let Err(e) = manifest.write_atomic(&dir) {
            eprintln!("warning: manifest not written: {e}");
        }
    }

    std::process::exit(code);
}
