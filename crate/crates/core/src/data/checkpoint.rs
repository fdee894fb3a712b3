//! Binary checkpoint format: magic, format version, the model spec fields,
//! the parameter count, then the raw little-endian 64-bit parameters in
//! layout order. A JSON sidecar (`<path>.json`) records seed, training
//! config and the checksum of the dataset the parameters were trained on.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, ModelKind, ModelSpec};
use crate::param::ParamVector;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DATADROP";
const CHECKPOINT_VERSION: u32 = 1;

/// Sidecar metadata written next to every checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    /// The training configuration that produced the parameters, as JSON.
    pub config: serde_json::Value,
    pub dataset_checksum: String,
}

fn kind_code(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::LinearMse => 0,
        ModelKind::Logistic => 1,
        ModelKind::Softmax => 2,
        ModelKind::Mlp => 3,
    }
}

fn kind_from_code(code: u8) -> Result<ModelKind> {
    Ok(match code {
        0 => ModelKind::LinearMse,
        1 => ModelKind::Logistic,
        2 => ModelKind::Softmax,
        3 => ModelKind::Mlp,
        other => return Err(Error::Format(format!("unknown model kind code {other}"))),
    })
}

fn activation_code(activation: Option<Activation>) -> u8 {
    match activation {
        None => 0,
        Some(Activation::Tanh) => 1,
        Some(Activation::Relu) => 2,
    }
}

fn activation_from_code(code: u8) -> Result<Option<Activation>> {
    Ok(match code {
        0 => None,
        1 => Some(Activation::Tanh),
        2 => Some(Activation::Relu),
        other => return Err(Error::Format(format!("unknown activation code {other}"))),
    })
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    spec: &ModelSpec,
    params: &ParamVector,
    meta: &CheckpointMeta,
) -> Result<()> {
    let path = path.as_ref();
    spec.validate()?;
    if params.len() != spec.param_count() {
        return Err(Error::ShapeMismatch {
            context: "checkpoint params",
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_u8(kind_code(spec.kind))?;
    w.write_u32::<LittleEndian>(spec.input_dim as u32)?;
    w.write_u32::<LittleEndian>(spec.output_dim as u32)?;
    w.write_u32::<LittleEndian>(spec.hidden_dim as u32)?;
    w.write_u8(activation_code(spec.activation))?;
    w.write_f64::<LittleEndian>(spec.l2_reg)?;
    w.write_u64::<LittleEndian>(params.len() as u64)?;
    for &x in params.as_slice() {
        w.write_f64::<LittleEndian>(x)?;
    }
    w.flush()?;

    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Format(format!("sidecar encode: {e}")))?;
    std::fs::write(sidecar, json)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelSpec, ParamVector)> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("{}: truncated header ({e})", path.display())))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "{}: not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported checkpoint version {version}",
            path.display()
        )));
    }
    let kind = kind_from_code(r.read_u8()?)?;
    let input_dim = r.read_u32::<LittleEndian>()? as usize;
    let output_dim = r.read_u32::<LittleEndian>()? as usize;
    let hidden_dim = r.read_u32::<LittleEndian>()? as usize;
    let activation = activation_from_code(r.read_u8()?)?;
    let l2_reg = r.read_f64::<LittleEndian>()?;
    let spec = ModelSpec { kind, input_dim, output_dim, hidden_dim, activation, l2_reg };
    spec.validate()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;

    let count = r.read_u64::<LittleEndian>()? as usize;
    if count != spec.param_count() {
        return Err(Error::Format(format!(
            "{}: parameter count {count} does not match spec ({})",
            path.display(),
            spec.param_count()
        )));
    }
    let mut values = vec![0.0f64; count];
    r.read_f64_into::<LittleEndian>(&mut values)
        .map_err(|e| Error::Format(format!("{}: truncated parameters ({e})", path.display())))?;
    let params = ParamVector::from_vec(values);
    if !params.all_finite() {
        return Err(Error::Format(format!(
            "{}: checkpoint contains non-finite parameters",
            path.display()
        )));
    }
    Ok((spec, params))
}

/// `model.ckpt` -> `model.ckpt.json`
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    std::path::PathBuf::from(os)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            seed: 17,
            config: json!({"epochs": 3}),
            dataset_checksum: "abc".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let spec = ModelSpec::mlp(3, 4, 5, Activation::Relu, 0.25);
        let params = ParamVector::from_vec(
            (0..spec.param_count())
                .map(|i| (i as f64 * 0.731).sin() / 3.0)
                .collect(),
        );
        save_checkpoint(&path, &spec, &params, &meta()).unwrap();
        let (spec2, params2) = load_checkpoint(&path).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(params, params2);
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn corrupt_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.ckpt");
        std::fs::write(&path, b"NOTADROPxxxxxxxxxxxxxxxx").unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn truncation_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let spec = ModelSpec::logistic(2, 0.0);
        let params = ParamVector::zeros(spec.param_count());
        save_checkpoint(&path, &spec, &params, &meta()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn param_count_mismatch_rejected() {
        let spec = ModelSpec::logistic(2, 0.0);
        let params = ParamVector::zeros(spec.param_count() + 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        assert!(save_checkpoint(&path, &spec, &params, &meta()).is_err());
    }
}
