//! Scalar linear regression with squared-error loss `(w.x + b - y)^2 / 2`.
//! The per-sample Hessian is the rank-one outer product of the augmented
//! input `(x, 1)`.

use crate::data::Sample;

/// `w . x + b` with layout `[w (input_dim), b]`.
pub(super) fn forward(params: &[f64], x: &[f64]) -> f64 {
    let (w, b) = params.split_at(x.len());
    w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b[0]
}

pub(super) fn data_loss(params: &[f64], sample: &Sample<'_>) -> f64 {
    let y = sample.label.as_target().expect("checked at boundary");
    let r = forward(params, sample.features) - y;
    0.5 * r * r
}

pub(super) fn data_loss_grad_accum(
    params: &[f64],
    sample: &Sample<'_>,
    scale: f64,
    out: &mut [f64],
) -> f64 {
    let y = sample.label.as_target().expect("checked at boundary");
    let r = forward(params, sample.features) - y;
    let d = sample.features.len();
    for (o, xi) in out[..d].iter_mut().zip(sample.features) {
        *o += scale * r * xi;
    }
    out[d] += scale * r;
    0.5 * r * r
}

pub(super) fn data_hvp_accum(
    _params: &[f64],
    sample: &Sample<'_>,
    v: &[f64],
    scale: f64,
    out: &mut [f64],
) {
    let d = sample.features.len();
    // t = (x, 1) . v
    let t = v[..d]
        .iter()
        .zip(sample.features)
        .map(|(vi, xi)| vi * xi)
        .sum::<f64>()
        + v[d];
    for (o, xi) in out[..d].iter_mut().zip(sample.features) {
        *o += scale * t * xi;
    }
    out[d] += scale * t;
}
