use thiserror::Error;

use crate::influence::InfluenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or feature row had the wrong length.
    #[error("{context}: expected length {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{0} must not be empty")]
    EmptyDataset(&'static str),

    #[error("sample {id}: class label {label} out of range for {classes} classes")]
    LabelOutOfRange { id: u64, label: usize, classes: usize },

    #[error("sample {id}: expected a {expected} label")]
    WrongLabelKind { id: u64, expected: &'static str },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("training produced a non-finite loss at step {step}")]
    TrainingDiverged { step: usize },

    #[error("full-batch training stalled at gradient norm {grad_norm:.3e} (tolerance {tol:.3e})")]
    NotConverged { grad_norm: f64, tol: f64 },

    #[error(
        "inverse-HVP solve diverged for validation sample {validation_index} \
         (residual {residual:.3e}, {solves_completed}/{total} solves completed)"
    )]
    IhvpDiverged {
        validation_index: usize,
        residual: f64,
        solves_completed: usize,
        total: usize,
    },

    /// Data dropout selected every training sample; the report that led to
    /// the empty reduced set rides along for inspection.
    #[error("data dropout removed every training sample")]
    EmptyReducedSet { report: Box<InfluenceReport> },

    /// A parse error in an input file, pinned to a line.
    #[error("{path}:{line}: {msg}")]
    Malformed { path: String, line: u64, msg: String },

    /// A binary or report format violation (bad magic, version, truncation).
    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
