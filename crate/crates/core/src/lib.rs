//! Training-data optimization by influence scoring.
//!
//! Given a trained model, every training sample gets a score predicting how
//! total validation loss would move if that sample were removed; samples
//! with positive scores are dropped in one shot and the model is retrained
//! from scratch on the survivors. The score factors through
//! `s_j = (H + damping I)^{-1} grad(x_j)` per validation sample, solved
//! implicitly (conjugate gradient or stochastic estimation) so the Hessian
//! is never materialized, and only `k` solves are ever performed.
//!
//! Modules:
//!
//! - [`model`] — differentiable models with exact gradients and
//!   Hessian-vector products over a flat parameter vector
//! - [`ihvp`] — matrix-free inverse-HVP solvers
//! - [`influence`] — per-sample scores, the `k`-solve scheduler, selection
//! - [`trainer`] — seeded deterministic SGD, evaluation, checkpoint-ready
//!   parameters
//! - [`pipeline`] — the two-round flow and the multi-round study
//! - [`loo`] — leave-one-out retraining oracle for auditing scores
//! - [`data`] — CSV/IDX ingestion, splits, synthetic blobs with planted
//!   label noise, checkpoints

pub mod data;
pub mod error;
pub mod ihvp;
pub mod influence;
pub mod loo;
pub mod model;
pub mod param;
pub mod pipeline;
mod seeding;
pub mod trainer;

pub use error::{Error, Result};
pub use param::ParamVector;

pub use data::{Dataset, Label, Provenance, Sample};
pub use ihvp::{IhvpConfig, IhvpMethod, IhvpResult};
pub use influence::{InfluenceReport, InfluenceScore, ScoreOptions};
pub use model::{Activation, ModelKind, ModelSpec};
pub use pipeline::{RoundCountSeries, TwoRoundResult};
pub use trainer::{InitScheme, Metrics, TrainConfig};

pub use seeding::derive_seed;
