//! One-hidden-layer MLP classifier with tanh or relu hidden units and a
//! softmax cross-entropy head.
//!
//! The Hessian-vector product is the hand-derived forward-over-reverse
//! recurrence: a tangent forward pass propagates the directional derivative
//! of every intermediate, then the backward pass is differentiated along the
//! same direction. relu uses subgradient 0 at the kink, so its second
//! derivative term vanishes identically.

use super::softmax::log_sum_exp_softmax;
use super::{Activation, ModelSpec};
use crate::data::Sample;

struct Slots {
    w1: std::ops::Range<usize>,
    b1: std::ops::Range<usize>,
    w2: std::ops::Range<usize>,
    b2: std::ops::Range<usize>,
}

fn slots(spec: &ModelSpec) -> Slots {
    let d = spec.input_dim;
    let h = spec.hidden_dim;
    let k = spec.output_dim;
    let w1 = 0..h * d;
    let b1 = w1.end..w1.end + h;
    let w2 = b1.end..b1.end + k * h;
    let b2 = w2.end..w2.end + k;
    Slots { w1, b1, w2, b2 }
}

fn act(a: f64, f: Activation) -> f64 {
    match f {
        Activation::Tanh => a.tanh(),
        Activation::Relu => a.max(0.0),
    }
}

/// First derivative, evaluated from the pre-activation. relu'(0) = 0.
fn act_prime(a: f64, f: Activation) -> f64 {
    match f {
        Activation::Tanh => {
            let t = a.tanh();
            1.0 - t * t
        }
        Activation::Relu => {
            if a > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Second derivative; identically zero for relu.
fn act_second(a: f64, f: Activation) -> f64 {
    match f {
        Activation::Tanh => {
            let t = a.tanh();
            -2.0 * t * (1.0 - t * t)
        }
        Activation::Relu => 0.0,
    }
}

struct Forward {
    pre: Vec<f64>,    // hidden pre-activations a = W1 x + b1
    hidden: Vec<f64>, // h = act(a)
    z: Vec<f64>,      // logits
    p: Vec<f64>,      // softmax(z)
    lse: f64,
}

fn forward(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Forward {
    let s = slots(spec);
    let d = spec.input_dim;
    let h = spec.hidden_dim;
    let k = spec.output_dim;
    let f = spec.activation.expect("mlp has an activation");

    let w1 = &params[s.w1.clone()];
    let b1 = &params[s.b1.clone()];
    let w2 = &params[s.w2.clone()];
    let b2 = &params[s.b2.clone()];

    let pre: Vec<f64> = (0..h)
        .map(|r| {
            w1[r * d..(r + 1) * d]
                .iter()
                .zip(x)
                .map(|(wi, xi)| wi * xi)
                .sum::<f64>()
                + b1[r]
        })
        .collect();
    let hidden: Vec<f64> = pre.iter().map(|&a| act(a, f)).collect();
    let z: Vec<f64> = (0..k)
        .map(|r| {
            w2[r * h..(r + 1) * h]
                .iter()
                .zip(&hidden)
                .map(|(wi, hi)| wi * hi)
                .sum::<f64>()
                + b2[r]
        })
        .collect();
    let (lse, p) = log_sum_exp_softmax(&z);
    Forward { pre, hidden, z, p, lse }
}

pub(super) fn logits(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Vec<f64> {
    forward(spec, params, x).z
}

pub(super) fn data_loss(spec: &ModelSpec, params: &[f64], sample: &Sample<'_>) -> f64 {
    let y = sample.label.as_class().expect("checked at boundary");
    let fwd = forward(spec, params, sample.features);
    fwd.lse - fwd.z[y]
}

pub(super) fn data_loss_grad_accum(
    spec: &ModelSpec,
    params: &[f64],
    sample: &Sample<'_>,
    scale: f64,
    out: &mut [f64],
) -> f64 {
    let y = sample.label.as_class().expect("checked at boundary");
    let x = sample.features;
    let s = slots(spec);
    let d = spec.input_dim;
    let h = spec.hidden_dim;
    let k = spec.output_dim;
    let f = spec.activation.expect("mlp has an activation");
    let fwd = forward(spec, params, x);
    let w2 = &params[s.w2.clone()];

    // delta_z = p - onehot(y); delta_a = act'(a) .* (W2^T delta_z)
    let delta_z: Vec<f64> = (0..k)
        .map(|r| fwd.p[r] - if r == y { 1.0 } else { 0.0 })
        .collect();
    let mut back = vec![0.0; h];
    for r in 0..k {
        for (bi, wi) in back.iter_mut().zip(&w2[r * h..(r + 1) * h]) {
            *bi += wi * delta_z[r];
        }
    }
    let delta_a: Vec<f64> = (0..h).map(|j| act_prime(fwd.pre[j], f) * back[j]).collect();

    for j in 0..h {
        for (o, xi) in out[s.w1.start + j * d..s.w1.start + (j + 1) * d]
            .iter_mut()
            .zip(x)
        {
            *o += scale * delta_a[j] * xi;
        }
        out[s.b1.start + j] += scale * delta_a[j];
    }
    for r in 0..k {
        for (o, hi) in out[s.w2.start + r * h..s.w2.start + (r + 1) * h]
            .iter_mut()
            .zip(&fwd.hidden)
        {
            *o += scale * delta_z[r] * hi;
        }
        out[s.b2.start + r] += scale * delta_z[r];
    }
    fwd.lse - fwd.z[y]
}

pub(super) fn data_hvp_accum(
    spec: &ModelSpec,
    params: &[f64],
    sample: &Sample<'_>,
    v: &[f64],
    scale: f64,
    out: &mut [f64],
) {
    let y = sample.label.as_class().expect("checked at boundary");
    let x = sample.features;
    let s = slots(spec);
    let d = spec.input_dim;
    let h = spec.hidden_dim;
    let k = spec.output_dim;
    let f = spec.activation.expect("mlp has an activation");
    let fwd = forward(spec, params, x);
    let w2 = &params[s.w2.clone()];
    let v1 = &v[s.w1.clone()];
    let c1 = &v[s.b1.clone()];
    let v2 = &v[s.w2.clone()];
    let c2 = &v[s.b2.clone()];

    // tangent forward pass
    let r_pre: Vec<f64> = (0..h)
        .map(|j| {
            v1[j * d..(j + 1) * d]
                .iter()
                .zip(x)
                .map(|(vi, xi)| vi * xi)
                .sum::<f64>()
                + c1[j]
        })
        .collect();
    let r_hidden: Vec<f64> = (0..h)
        .map(|j| act_prime(fwd.pre[j], f) * r_pre[j])
        .collect();
    let r_z: Vec<f64> = (0..k)
        .map(|r| {
            let from_v2: f64 = v2[r * h..(r + 1) * h]
                .iter()
                .zip(&fwd.hidden)
                .map(|(vi, hi)| vi * hi)
                .sum();
            let from_w2: f64 = w2[r * h..(r + 1) * h]
                .iter()
                .zip(&r_hidden)
                .map(|(wi, rh)| wi * rh)
                .sum();
            from_v2 + from_w2 + c2[r]
        })
        .collect();

    // backward quantities and their tangents
    let delta_z: Vec<f64> = (0..k)
        .map(|r| fwd.p[r] - if r == y { 1.0 } else { 0.0 })
        .collect();
    // R[delta_z] = (diag(p) - p p^T) r_z
    let mean: f64 = fwd.p.iter().zip(&r_z).map(|(pi, ri)| pi * ri).sum();
    let r_delta_z: Vec<f64> = (0..k).map(|r| fwd.p[r] * (r_z[r] - mean)).collect();

    let mut back = vec![0.0; h]; // W2^T delta_z
    let mut r_back = vec![0.0; h]; // V2^T delta_z + W2^T R[delta_z]
    for r in 0..k {
        for j in 0..h {
            back[j] += w2[r * h + j] * delta_z[r];
            r_back[j] += v2[r * h + j] * delta_z[r] + w2[r * h + j] * r_delta_z[r];
        }
    }
    let r_delta_a: Vec<f64> = (0..h)
        .map(|j| {
            act_second(fwd.pre[j], f) * r_pre[j] * back[j]
                + act_prime(fwd.pre[j], f) * r_back[j]
        })
        .collect();

    for j in 0..h {
        for (o, xi) in out[s.w1.start + j * d..s.w1.start + (j + 1) * d]
            .iter_mut()
            .zip(x)
        {
            *o += scale * r_delta_a[j] * xi;
        }
        out[s.b1.start + j] += scale * r_delta_a[j];
    }
    for r in 0..k {
        for j in 0..h {
            out[s.w2.start + r * h + j] +=
                scale * (r_delta_z[r] * fwd.hidden[j] + delta_z[r] * r_hidden[j]);
        }
        out[s.b2.start + r] += scale * r_delta_z[r];
    }
}
