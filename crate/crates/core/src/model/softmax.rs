//! Multinomial logistic regression: logits `z = W x + b`, cross-entropy
//! loss `logsumexp(z) - z_y`. The Hessian-vector product uses the exact
//! Gauss factor `A = diag(p) - p p^T` applied to the tangent logits.

use crate::data::Sample;

/// Logits for layout `[W (k x d row-major), b (k)]`.
pub(super) fn logits(k: usize, params: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let (w, b) = params.split_at(k * d);
    (0..k)
        .map(|r| {
            w[r * d..(r + 1) * d]
                .iter()
                .zip(x)
                .map(|(wi, xi)| wi * xi)
                .sum::<f64>()
                + b[r]
        })
        .collect()
}

/// Numerically stable `(log sum exp z, softmax z)`.
pub(super) fn log_sum_exp_softmax(z: &[f64]) -> (f64, Vec<f64>) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|zi| (zi - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    let lse = m + total.ln();
    let p = exps.iter().map(|e| e / total).collect();
    (lse, p)
}

pub(super) fn data_loss(k: usize, params: &[f64], sample: &Sample<'_>) -> f64 {
    let y = sample.label.as_class().expect("checked at boundary");
    let z = logits(k, params, sample.features);
    let (lse, _) = log_sum_exp_softmax(&z);
    lse - z[y]
}

pub(super) fn data_loss_grad_accum(
    k: usize,
    params: &[f64],
    sample: &Sample<'_>,
    scale: f64,
    out: &mut [f64],
) -> f64 {
    let y = sample.label.as_class().expect("checked at boundary");
    let x = sample.features;
    let d = x.len();
    let z = logits(k, params, x);
    let (lse, p) = log_sum_exp_softmax(&z);
    // delta = p - onehot(y)
    for r in 0..k {
        let delta = p[r] - if r == y { 1.0 } else { 0.0 };
        for (o, xi) in out[r * d..(r + 1) * d].iter_mut().zip(x) {
            *o += scale * delta * xi;
        }
        out[k * d + r] += scale * delta;
    }
    lse - z[y]
}

pub(super) fn data_hvp_accum(
    k: usize,
    params: &[f64],
    sample: &Sample<'_>,
    v: &[f64],
    scale: f64,
    out: &mut [f64],
) {
    let x = sample.features;
    let d = x.len();
    let z = logits(k, params, x);
    let (_, p) = log_sum_exp_softmax(&z);
    // tangent logits rz = V x + c for the direction v = (V, c)
    let rz: Vec<f64> = (0..k)
        .map(|r| {
            v[r * d..(r + 1) * d]
                .iter()
                .zip(x)
                .map(|(vi, xi)| vi * xi)
                .sum::<f64>()
                + v[k * d + r]
        })
        .collect();
    // A rz with A = diag(p) - p p^T
    let mean: f64 = p.iter().zip(&rz).map(|(pi, ri)| pi * ri).sum();
    for r in 0..k {
        let arz = p[r] * (rz[r] - mean);
        for (o, xi) in out[r * d..(r + 1) * d].iter_mut().zip(x) {
            *o += scale * arz * xi;
        }
        out[k * d + r] += scale * arz;
    }
}
