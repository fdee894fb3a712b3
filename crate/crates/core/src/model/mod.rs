//! Self-contained differentiable models: linear least squares, logistic /
//! softmax regression, and a one-hidden-layer MLP. Each exposes per-sample
//! loss, exact analytic gradient and an exact Hessian-vector product over a
//! flat parameter vector.
//!
//! Parameter layout is weights-then-biases, layer by layer, row-major:
//!
//! - `linear-mse`:            `[w (input_dim), b]`
//! - `logistic` / `softmax`:  `[W (output_dim x input_dim), b (output_dim)]`
//! - `mlp`:                   `[W1 (hidden x input), b1 (hidden),
//!                              W2 (output x hidden), b2 (output)]`
//!
//! The per-sample loss of every kind includes the ridge term
//! `l2_reg * ||params||^2 / 2`; the `data_*` variants drop it. Hessian-vector
//! products are mean-of-per-sample Hessians of the full (ridge-inclusive)
//! loss, computed by the forward-over-reverse recurrence for the MLP rather
//! than finite differences. All operations are pure functions and safe to
//! call concurrently on shared read-only inputs.

mod linear;
mod mlp;
mod softmax;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, Sample};
use crate::error::{Error, Result};
use crate::param::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LinearMse,
    Logistic,
    Softmax,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Hidden width; positive iff `kind` is `Mlp`.
    pub hidden_dim: usize,
    /// Hidden activation; present iff `kind` is `Mlp`.
    pub activation: Option<Activation>,
    /// Ridge coefficient on the whole parameter vector.
    pub l2_reg: f64,
}

impl ModelSpec {
    pub fn linear_mse(input_dim: usize, l2_reg: f64) -> Self {
        Self {
            kind: ModelKind::LinearMse,
            input_dim,
            output_dim: 1,
            hidden_dim: 0,
            activation: None,
            l2_reg,
        }
    }

    /// Binary classifier, realized as two-class softmax.
    pub fn logistic(input_dim: usize, l2_reg: f64) -> Self {
        Self {
            kind: ModelKind::Logistic,
            input_dim,
            output_dim: 2,
            hidden_dim: 0,
            activation: None,
            l2_reg,
        }
    }

    pub fn softmax(input_dim: usize, classes: usize, l2_reg: f64) -> Self {
        Self {
            kind: ModelKind::Softmax,
            input_dim,
            output_dim: classes,
            hidden_dim: 0,
            activation: None,
            l2_reg,
        }
    }

    pub fn mlp(
        input_dim: usize,
        classes: usize,
        hidden_dim: usize,
        activation: Activation,
        l2_reg: f64,
    ) -> Self {
        Self {
            kind: ModelKind::Mlp,
            input_dim,
            output_dim: classes,
            hidden_dim,
            activation: Some(activation),
            l2_reg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidSpec("input_dim must be positive".into()));
        }
        if !self.l2_reg.is_finite() || self.l2_reg < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "l2_reg must be non-negative, got {}",
                self.l2_reg
            )));
        }
        match self.kind {
            ModelKind::LinearMse => {
                if self.output_dim != 1 {
                    return Err(Error::InvalidSpec(
                        "linear-mse requires output_dim = 1".into(),
                    ));
                }
            }
            ModelKind::Logistic => {
                if self.output_dim != 2 {
                    return Err(Error::InvalidSpec("logistic requires output_dim = 2".into()));
                }
            }
            ModelKind::Softmax => {
                if self.output_dim < 2 {
                    return Err(Error::InvalidSpec("softmax requires output_dim >= 2".into()));
                }
            }
            ModelKind::Mlp => {
                if self.output_dim < 2 {
                    return Err(Error::InvalidSpec("mlp requires output_dim >= 2".into()));
                }
            }
        }
        let is_mlp = self.kind == ModelKind::Mlp;
        if is_mlp != (self.hidden_dim > 0) {
            return Err(Error::InvalidSpec(
                "hidden_dim must be positive iff kind is mlp".into(),
            ));
        }
        if is_mlp != self.activation.is_some() {
            return Err(Error::InvalidSpec(
                "activation must be set iff kind is mlp".into(),
            ));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::LinearMse => self.input_dim + 1,
            ModelKind::Logistic | ModelKind::Softmax => {
                self.output_dim * (self.input_dim + 1)
            }
            ModelKind::Mlp => {
                self.hidden_dim * (self.input_dim + 1)
                    + self.output_dim * (self.hidden_dim + 1)
            }
        }
    }

    pub fn is_classifier(&self) -> bool {
        !matches!(self.kind, ModelKind::LinearMse)
    }

    /// Layer shapes as `(fan_in, fan_out)` pairs, in layout order.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ModelKind::LinearMse => vec![(self.input_dim, 1)],
            ModelKind::Logistic | ModelKind::Softmax => {
                vec![(self.input_dim, self.output_dim)]
            }
            ModelKind::Mlp => vec![
                (self.input_dim, self.hidden_dim),
                (self.hidden_dim, self.output_dim),
            ],
        }
    }

    /// The same model with `extra` added to the ridge coefficient. Used to
    /// fold a trainer's weight decay into the differentiable objective.
    pub fn with_extra_l2(&self, extra: f64) -> Self {
        let mut out = self.clone();
        out.l2_reg += extra;
        out
    }
}

fn check_params(spec: &ModelSpec, params: &ParamVector) -> Result<()> {
    if params.len() != spec.param_count() {
        return Err(Error::ShapeMismatch {
            context: "params",
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    Ok(())
}

fn check_sample(spec: &ModelSpec, sample: &Sample<'_>) -> Result<()> {
    if sample.features.len() != spec.input_dim {
        return Err(Error::ShapeMismatch {
            context: "sample features",
            expected: spec.input_dim,
            got: sample.features.len(),
        });
    }
    match (spec.is_classifier(), sample.label) {
        (true, Label::Class(c)) => {
            if c >= spec.output_dim {
                return Err(Error::LabelOutOfRange {
                    id: sample.id,
                    label: c,
                    classes: spec.output_dim,
                });
            }
        }
        (true, Label::Target(_)) => {
            return Err(Error::WrongLabelKind {
                id: sample.id,
                expected: "class",
            });
        }
        (false, Label::Target(_)) => {}
        (false, Label::Class(_)) => {
            return Err(Error::WrongLabelKind {
                id: sample.id,
                expected: "real target",
            });
        }
    }
    Ok(())
}

fn ridge_term(spec: &ModelSpec, params: &ParamVector) -> f64 {
    0.5 * spec.l2_reg * params.dot(params)
}

/// Per-sample loss without the ridge term.
pub fn data_loss(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>) -> Result<f64> {
    spec.validate()?;
    check_params(spec, params)?;
    check_sample(spec, sample)?;
    let value = dispatch_loss(spec, params, sample);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            context: format!("loss of sample {}", sample.id),
        });
    }
    Ok(value)
}

/// Per-sample loss including `l2_reg * ||params||^2 / 2`.
pub fn loss(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>) -> Result<f64> {
    Ok(data_loss(spec, params, sample)? + ridge_term(spec, params))
}

/// Exact gradient of [`data_loss`] with respect to the parameters.
pub fn data_grad(
    spec: &ModelSpec,
    params: &ParamVector,
    sample: &Sample<'_>,
) -> Result<ParamVector> {
    Ok(data_loss_grad(spec, params, sample)?.1)
}

/// Exact gradient of [`loss`] (ridge included).
pub fn grad(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>) -> Result<ParamVector> {
    let (_, mut g) = data_loss_grad(spec, params, sample)?;
    g.axpy(spec.l2_reg, params);
    Ok(g)
}

/// Loss and gradient in one pass, without the ridge term.
pub fn data_loss_grad(
    spec: &ModelSpec,
    params: &ParamVector,
    sample: &Sample<'_>,
) -> Result<(f64, ParamVector)> {
    spec.validate()?;
    check_params(spec, params)?;
    check_sample(spec, sample)?;
    let mut g = ParamVector::zeros(params.len());
    let value = dispatch_loss_grad_accum(spec, params, sample, 1.0, g.as_mut_slice());
    if !value.is_finite() || !g.all_finite() {
        return Err(Error::NonFinite {
            context: format!("gradient of sample {}", sample.id),
        });
    }
    Ok((value, g))
}

/// Loss and gradient in one pass, ridge included.
pub fn loss_grad(
    spec: &ModelSpec,
    params: &ParamVector,
    sample: &Sample<'_>,
) -> Result<(f64, ParamVector)> {
    let (value, mut g) = data_loss_grad(spec, params, sample)?;
    g.axpy(spec.l2_reg, params);
    Ok((value + ridge_term(spec, params), g))
}

/// Exact damped Hessian-vector product of the mean training loss:
/// `(H + damping I) v` with `H = mean_i grad^2 loss(x_i)` (ridge included,
/// so `H = mean_i grad^2 data_loss(x_i) + l2_reg I`). Deterministic; no
/// finite differencing anywhere.
pub fn hvp(
    spec: &ModelSpec,
    params: &ParamVector,
    dataset: &Dataset,
    v: &ParamVector,
    damping: f64,
) -> Result<ParamVector> {
    let indices: Vec<usize> = (0..dataset.len()).collect();
    hvp_batch(spec, params, dataset, &indices, v, damping)
}

/// [`hvp`] restricted to a subset of rows; the subset mean is used. This is
/// the sampled-Hessian oracle behind stochastic inverse-HVP estimation.
pub fn hvp_batch(
    spec: &ModelSpec,
    params: &ParamVector,
    dataset: &Dataset,
    indices: &[usize],
    v: &ParamVector,
    damping: f64,
) -> Result<ParamVector> {
    spec.validate()?;
    check_params(spec, params)?;
    if indices.is_empty() {
        return Err(Error::EmptyDataset("hvp batch"));
    }
    if v.len() != params.len() {
        return Err(Error::ShapeMismatch {
            context: "hvp direction",
            expected: params.len(),
            got: v.len(),
        });
    }
    if !damping.is_finite() || damping < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "damping must be non-negative, got {damping}"
        )));
    }
    let mut out = ParamVector::zeros(params.len());
    let scale = 1.0 / indices.len() as f64;
    for &i in indices {
        let sample = dataset.sample(i);
        check_sample(spec, &sample)?;
        dispatch_hvp_accum(spec, params, &sample, v, scale, out.as_mut_slice());
    }
    out.axpy(spec.l2_reg + damping, v);
    if !out.all_finite() {
        return Err(Error::NonFinite {
            context: "hessian-vector product".into(),
        });
    }
    Ok(out)
}

/// Check every row of a dataset against the spec's dimensions and label
/// space, so training and scoring fail fast with a precise message instead
/// of deep inside a batch loop.
pub fn validate_dataset(spec: &ModelSpec, dataset: &Dataset) -> Result<()> {
    spec.validate()?;
    if dataset.input_dim() != spec.input_dim {
        return Err(Error::ShapeMismatch {
            context: "dataset features",
            expected: spec.input_dim,
            got: dataset.input_dim(),
        });
    }
    for sample in dataset.iter() {
        check_sample(spec, &sample)?;
    }
    Ok(())
}

/// Decision scores: the single linear output for `linear-mse`, logits for
/// the classifiers. Argmax of the scores is the predicted class.
pub fn class_scores(
    spec: &ModelSpec,
    params: &ParamVector,
    features: &[f64],
) -> Result<Vec<f64>> {
    spec.validate()?;
    check_params(spec, params)?;
    if features.len() != spec.input_dim {
        return Err(Error::ShapeMismatch {
            context: "sample features",
            expected: spec.input_dim,
            got: features.len(),
        });
    }
    Ok(match spec.kind {
        ModelKind::LinearMse => vec![linear::forward(params.as_slice(), features)],
        ModelKind::Logistic | ModelKind::Softmax => {
            softmax::logits(spec.output_dim, params.as_slice(), features)
        }
        ModelKind::Mlp => mlp::logits(spec, params.as_slice(), features),
    })
}

// Internal accumulate-style dispatch. `scale * grad` / `scale * H v` of the
// data loss is added into `out`, which must have `param_count` entries.
// Shape checks happened at the public boundary.

fn dispatch_loss(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>) -> f64 {
    match spec.kind {
        ModelKind::LinearMse => linear::data_loss(params.as_slice(), sample),
        ModelKind::Logistic | ModelKind::Softmax => {
            softmax::data_loss(spec.output_dim, params.as_slice(), sample)
        }
        ModelKind::Mlp => mlp::data_loss(spec, params.as_slice(), sample),
    }
}

pub(crate) fn dispatch_loss_grad_accum(
    spec: &ModelSpec,
    params: &ParamVector,
    sample: &Sample<'_>,
    scale: f64,
    out: &mut [f64],
) -> f64 {
    match spec.kind {
        ModelKind::LinearMse => linear::data_loss_grad_accum(params.as_slice(), sample, scale, out),
        ModelKind::Logistic | ModelKind::Softmax => {
            softmax::data_loss_grad_accum(spec.output_dim, params.as_slice(), sample, scale, out)
        }
        ModelKind::Mlp => mlp::data_loss_grad_accum(spec, params.as_slice(), sample, scale, out),
    }
}

fn dispatch_hvp_accum(
    spec: &ModelSpec,
    params: &ParamVector,
    sample: &Sample<'_>,
    v: &ParamVector,
    scale: f64,
    out: &mut [f64],
) {
    match spec.kind {
        ModelKind::LinearMse => {
            linear::data_hvp_accum(params.as_slice(), sample, v.as_slice(), scale, out)
        }
        ModelKind::Logistic | ModelKind::Softmax => softmax::data_hvp_accum(
            spec.output_dim,
            params.as_slice(),
            sample,
            v.as_slice(),
            scale,
            out,
        ),
        ModelKind::Mlp => {
            mlp::data_hvp_accum(spec, params.as_slice(), sample, v.as_slice(), scale, out)
        }
    }
}

#[cfg(test)]
mod tests;
