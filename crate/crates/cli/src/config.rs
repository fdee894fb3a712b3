//! Flag/file/default resolution. Command-line flags override the optional
//! JSON config file, which overrides built-in defaults; the fully resolved
//! configuration is echoed into the run manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use datadrop::data::{load_csv, load_idx, synth_blobs, CsvSchema, LabelKind};
use datadrop::model::{Activation, ModelKind, ModelSpec};
use datadrop::trainer::{InitScheme, TrainConfig};
use datadrop::{derive_seed, Dataset, IhvpConfig, IhvpMethod};

use crate::CliError;

/// Optional JSON config file; every field can be overridden by a flag.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct FileConfig {
    pub spec: Option<String>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub lr_schedule: Option<Vec<(usize, f64)>>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub l2_reg: Option<f64>,
    pub init: Option<String>,
    pub shuffle: Option<bool>,
    pub ihvp: Option<String>,
    pub damping: Option<f64>,
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub lissa_depth: Option<usize>,
    pub lissa_scale: Option<f64>,
    pub lissa_repeats: Option<usize>,
    pub lissa_batch: Option<usize>,
    pub rounds: Option<usize>,
    pub val_fraction: Option<f64>,
    pub workers: Option<usize>,
    pub label_col: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))
            }
        }
    }
}

/// The fully resolved configuration, serialized into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub spec: Option<ModelSpec>,
    pub seed: u64,
    pub train: TrainConfig,
    pub ihvp: IhvpConfig,
    pub rounds: usize,
    pub val_fraction: f64,
    pub workers: usize,
    pub label_col: String,
}

pub struct CommonFlags {
    pub spec: Option<String>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub l2_reg: Option<f64>,
    pub init: Option<String>,
    pub no_shuffle: bool,
    pub ihvp: Option<String>,
    pub damping: Option<f64>,
    pub cg_tol: Option<f64>,
    pub lissa_depth: Option<usize>,
    pub lissa_scale: Option<f64>,
    pub lissa_repeats: Option<usize>,
    pub lissa_batch: Option<usize>,
    pub rounds: Option<usize>,
    pub val_fraction: Option<f64>,
    pub workers: Option<usize>,
    pub label_col: Option<String>,
}

pub fn resolve(flags: &CommonFlags, file: &FileConfig) -> Result<Resolved, CliError> {
    let seed = flags.seed.or(file.seed).unwrap_or(0);

    let mut train = TrainConfig { seed, ..TrainConfig::default() };
    if let Some(e) = flags.epochs.or(file.epochs) {
        train.epochs = e;
    }
    if let Some(b) = flags.batch_size.or(file.batch_size) {
        train.batch_size = b;
    }
    if let Some(schedule) = &file.lr_schedule {
        train.lr_schedule = schedule.clone();
    }
    if let Some(lr) = flags.lr.or(file.lr) {
        train.lr_schedule = vec![(0, lr)];
    }
    if let Some(m) = flags.momentum.or(file.momentum) {
        train.momentum = m;
    }
    if let Some(w) = flags.weight_decay.or(file.weight_decay) {
        train.weight_decay = w;
    }
    if let Some(init) = flags.init.as_deref().or(file.init.as_deref()) {
        train.init = match init {
            "scaled-normal-fan-in" => InitScheme::ScaledNormalFanIn,
            "scaled-uniform-fan-avg" => InitScheme::ScaledUniformFanAvg,
            other => return Err(CliError::config(format!("unknown init scheme {other:?}"))),
        };
    }
    if flags.no_shuffle {
        train.shuffle = false;
    } else if let Some(s) = file.shuffle {
        train.shuffle = s;
    }

    let mut ihvp = IhvpConfig { seed, ..IhvpConfig::default() };
    if let Some(m) = flags.ihvp.as_deref().or(file.ihvp.as_deref()) {
        ihvp.method = match m {
            "cg" => IhvpMethod::Cg,
            "lissa" => IhvpMethod::Lissa,
            other => return Err(CliError::config(format!("unknown ihvp method {other:?}"))),
        };
    }
    if let Some(d) = flags.damping.or(file.damping) {
        ihvp.damping = d;
    }
    if let Some(t) = flags.cg_tol.or(file.cg_tol) {
        ihvp.cg_tol = t;
    }
    if let Some(i) = file.cg_max_iter {
        ihvp.cg_max_iter = i;
    }
    if let Some(d) = flags.lissa_depth.or(file.lissa_depth) {
        ihvp.lissa_depth = d;
    }
    if let Some(s) = flags.lissa_scale.or(file.lissa_scale) {
        ihvp.lissa_scale = s;
    }
    if let Some(r) = flags.lissa_repeats.or(file.lissa_repeats) {
        ihvp.lissa_repeats = r;
    }
    if let Some(b) = flags.lissa_batch.or(file.lissa_batch) {
        ihvp.lissa_batch = b;
    }

    let spec = match flags.spec.as_deref().or(file.spec.as_deref()) {
        Some(text) => Some(parse_spec(text, flags.l2_reg.or(file.l2_reg))?),
        None => None,
    };

    Ok(Resolved {
        spec,
        seed,
        train,
        ihvp,
        rounds: flags.rounds.or(file.rounds).unwrap_or(2),
        val_fraction: flags.val_fraction.or(file.val_fraction).unwrap_or(0.1),
        workers: flags.workers.or(file.workers).unwrap_or(0),
        label_col: flags
            .label_col
            .clone()
            .or_else(|| file.label_col.clone())
            .unwrap_or_else(|| "label".into()),
    })
}

/// Compact model descriptor: `kind:key=value,...`, e.g.
/// `logistic:in=2`, `softmax:in=4,out=3,l2=0.05`,
/// `mlp:in=8,out=3,hidden=16,act=relu`. A `--l2-reg` flag overrides the
/// descriptor's `l2`.
pub fn parse_spec(text: &str, l2_flag: Option<f64>) -> Result<ModelSpec, CliError> {
    let (kind_str, rest) = match text.split_once(':') {
        Some((k, r)) => (k, r),
        None => (text, ""),
    };
    let kind = match kind_str {
        "linear-mse" => ModelKind::LinearMse,
        "logistic" => ModelKind::Logistic,
        "softmax" => ModelKind::Softmax,
        "mlp" => ModelKind::Mlp,
        other => return Err(CliError::config(format!("unknown model kind {other:?}"))),
    };
    let mut input_dim = None;
    let mut output_dim = None;
    let mut hidden_dim = None;
    let mut activation = None;
    let mut l2 = 0.0;
    for part in rest.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("bad spec field {part:?}")))?;
        let bad = |e: String| CliError::config(format!("spec field {key}: {e}"));
        match key {
            "in" => input_dim = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "out" => output_dim = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "hidden" => hidden_dim = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "act" => {
                activation = Some(match value {
                    "tanh" => Activation::Tanh,
                    "relu" => Activation::Relu,
                    other => return Err(bad(format!("unknown activation {other:?}"))),
                })
            }
            "l2" => l2 = value.parse().map_err(|e| bad(format!("{e}")))?,
            other => return Err(CliError::config(format!("unknown spec field {other:?}"))),
        }
    }
    if let Some(flag) = l2_flag {
        l2 = flag;
    }
    let input_dim =
        input_dim.ok_or_else(|| CliError::config("spec needs in=<input_dim>".into()))?;
    let spec = match kind {
        ModelKind::LinearMse => ModelSpec::linear_mse(input_dim, l2),
        ModelKind::Logistic => ModelSpec::logistic(input_dim, l2),
        ModelKind::Softmax => {
            let out = output_dim
                .ok_or_else(|| CliError::config("softmax needs out=<classes>".into()))?;
            ModelSpec::softmax(input_dim, out, l2)
        }
        ModelKind::Mlp => {
            let out =
                output_dim.ok_or_else(|| CliError::config("mlp needs out=<classes>".into()))?;
            let hidden =
                hidden_dim.ok_or_else(|| CliError::config("mlp needs hidden=<width>".into()))?;
            ModelSpec::mlp(input_dim, out, hidden, activation.unwrap_or(Activation::Tanh), l2)
        }
    };
    spec.validate().map_err(CliError::from_core)?;
    Ok(spec)
}

/// Data sources accepted by `--data` / `--val-data` / `--train-data`:
///
/// - a `.csv` path (label column from `--label-col`, class or target labels
///   inferred from the model kind)
/// - `idx:IMAGES,LABELS` for an IDX image/label pair
/// - `synth:blobs,n=500,dim=2,classes=3,sep=2.5,flip=0.1` for seeded
///  Gaussian clusters with planted label noise
pub fn load_data(
    source: &str,
    resolved: &Resolved,
    spec: Option<&ModelSpec>,
    stream: u64,
) -> Result<Dataset, CliError> {
    if let Some(rest) = source.strip_prefix("synth:") {
        return synth_from_descriptor(rest, derive_seed(resolved.seed, stream));
    }
    if let Some(rest) = source.strip_prefix("idx:") {
        let (images, labels) = rest
            .split_once(',')
            .ok_or_else(|| CliError::config("idx source needs idx:IMAGES,LABELS".into()))?;
        return load_idx(images, labels).map_err(CliError::from_core);
    }
    let label_kind = match spec.map(|s| s.kind) {
        Some(ModelKind::LinearMse) => LabelKind::Target,
        _ => LabelKind::Class,
    };
    let schema = CsvSchema {
        label_column: resolved.label_col.clone(),
        feature_columns: None,
        label_kind,
    };
    load_csv(source, &schema).map_err(CliError::from_core)
}

fn synth_from_descriptor(text: &str, seed: u64) -> Result<Dataset, CliError> {
    let mut parts = text.split(',');
    let shape = parts.next().unwrap_or_default();
    if shape != "blobs" {
        return Err(CliError::config(format!(
            "unknown synthetic generator {shape:?} (expected blobs)"
        )));
    }
    let mut n = 200usize;
    let mut dim = 2usize;
    let mut classes = 2usize;
    let mut sep = 3.0f64;
    let mut flip = 0.0f64;
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("bad synth field {part:?}")))?;
        let bad = |e: String| CliError::config(format!("synth field {key}: {e}"));
        match key {
            "n" => n = value.parse().map_err(|e| bad(format!("{e}")))?,
            "dim" => dim = value.parse().map_err(|e| bad(format!("{e}")))?,
            "classes" => classes = value.parse().map_err(|e| bad(format!("{e}")))?,
            "sep" => sep = value.parse().map_err(|e| bad(format!("{e}")))?,
            "flip" => flip = value.parse().map_err(|e| bad(format!("{e}")))?,
            other => return Err(CliError::config(format!("unknown synth field {other:?}"))),
        }
    }
    let (ds, _) = synth_blobs(n, dim, classes, sep, flip, seed).map_err(CliError::from_core)?;
    Ok(ds)
}
