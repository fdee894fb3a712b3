//! Shared oracles for the integration suites. Everything here recomputes
//! quantities through an independent route (finite differences, dense
//! assembly + direct solve, rank statistics from first principles) so the
//! production code never checks itself.

#![allow(dead_code)]

use datadrop::data::{Dataset, Label, Provenance, Sample};
use datadrop::model::{self, ModelSpec};
use datadrop::ParamVector;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (norm + 1e-12)
}

pub fn scalar_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()) + 1e-30)
}

/// Central finite differences of the ridge-inclusive loss.
pub fn fd_grad(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>, eps: f64) -> ParamVector {
    let mut g = ParamVector::zeros(params.len());
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.as_mut_slice()[i] += eps;
        let mut minus = params.clone();
        minus.as_mut_slice()[i] -= eps;
        g.as_mut_slice()[i] = (model::loss(spec, &plus, sample).unwrap()
            - model::loss(spec, &minus, sample).unwrap())
            / (2.0 * eps);
    }
    g
}

/// Central finite differences of the mean ridge-inclusive gradient plus the
/// damping term: the independent oracle for `hvp`.
pub fn fd_hvp(
    spec: &ModelSpec,
    params: &ParamVector,
    ds: &Dataset,
    v: &ParamVector,
    damping: f64,
    eps: f64,
) -> ParamVector {
    let mean_grad = |p: &ParamVector| {
        let mut acc = ParamVector::zeros(p.len());
        for s in ds.iter() {
            acc.axpy(1.0 / ds.len() as f64, &model::grad(spec, p, &s).unwrap());
        }
        acc
    };
    let mut plus = params.clone();
    let mut minus = params.clone();
    plus.axpy(eps, v);
    minus.axpy(-eps, v);
    let mut out = mean_grad(&plus);
    out.axpy(-1.0, &mean_grad(&minus));
    out.scale(1.0 / (2.0 * eps));
    out.axpy(damping, v);
    out
}

/// Assemble the damped Hessian column by column and solve directly.
pub fn dense_solve(
    spec: &ModelSpec,
    params: &ParamVector,
    ds: &Dataset,
    v: &ParamVector,
    damping: f64,
) -> ParamVector {
    let p = params.len();
    let mut h = nalgebra::DMatrix::<f64>::zeros(p, p);
    for col in 0..p {
        let mut e = ParamVector::zeros(p);
        e.as_mut_slice()[col] = 1.0;
        let he = model::hvp(spec, params, ds, &e, damping).unwrap();
        for row in 0..p {
            h[(row, col)] = he.as_slice()[row];
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(v.as_slice());
    let sol = h.lu().solve(&rhs).expect("damped Hessian is invertible");
    ParamVector::from_vec(sol.iter().copied().collect())
}

/// Spearman rank correlation, written independently of the library's:
/// ranks by sorting index pairs, then the closed-form Pearson on ranks.
pub fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let rank = |xs: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
        let mut r = vec![0.0; xs.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &ix in &idx[i..=j] {
                r[ix] = avg;
            }
            i = j + 1;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da.sqrt() * db.sqrt())
}

pub fn random_params(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> ParamVector {
    ParamVector::from_vec((0..spec.param_count()).map(|_| rng.random_range(-0.8..0.8)).collect())
}

pub fn random_dataset(spec: &ModelSpec, n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let d = spec.input_dim;
    let features: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.5..1.5)).collect();
    let labels: Vec<Label> = (0..n)
        .map(|_| {
            if spec.is_classifier() {
                Label::Class(rng.random_range(0..spec.output_dim))
            } else {
                Label::Target(rng.random_range(-2.0..2.0))
            }
        })
        .collect();
    Dataset::new("rand", Provenance::Synthetic, d, features, labels, (0..n as u64).collect())
        .unwrap()
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
