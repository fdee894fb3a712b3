//! Run manifests: every command that owns an output directory writes one,
//! atomically, at run end — success or failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_snapshot: serde_json::Value,
    pub input_checksums: BTreeMap<String, String>,
    pub output_paths: Vec<PathBuf>,
    pub wall_time_seconds: f64,
    pub exit_status: i32,
}

impl RunManifest {
    /// Write as `manifest.json` under `dir` via a temp file + rename, so a
    /// crash never leaves a half-written manifest.
    pub fn write_atomic(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let target = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| std::io::Error::other(format!("manifest encode: {e}")))?;
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, &target)?;
        Ok(target)
    }
}

/// SHA-256 of a file, for `input_checksums`. Non-file sources (synthetic
/// descriptors) are recorded by their dataset checksum instead.
pub fn file_checksum(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}
