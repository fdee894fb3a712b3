use super::*;
use crate::data::{Dataset, Label, Provenance, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (norm + 1e-12)
}

fn scalar_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()) + 1e-30)
}

/// Central finite differences of the (ridge-inclusive) loss.
fn fd_grad(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>, eps: f64) -> ParamVector {
    let mut g = ParamVector::zeros(params.len());
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += eps;
        let mut minus = params.clone();
        minus[i] -= eps;
        g[i] = (loss(spec, &plus, sample).unwrap() - loss(spec, &minus, sample).unwrap())
            / (2.0 * eps);
    }
    g
}

/// Central finite differences of the mean (ridge-inclusive) gradient, plus
/// the damping term: the independent oracle for `hvp`.
fn fd_hvp(
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
            acc.axpy(1.0 / ds.len() as f64, &grad(spec, p, &s).unwrap());
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

fn random_params(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> ParamVector {
    ParamVector::from_vec(
        (0..spec.param_count())
            .map(|_| rng.random_range(-0.8..0.8))
            .collect(),
    )
}

fn random_dataset(spec: &ModelSpec, n: usize, rng: &mut ChaCha8Rng) -> Dataset {
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
    let ids = (0..n as u64).collect();
    Dataset::new("rand", Provenance::Synthetic, d, features, labels, ids).unwrap()
}

fn all_kinds() -> Vec<ModelSpec> {
    vec![
        ModelSpec::linear_mse(4, 0.05),
        ModelSpec::logistic(4, 0.05),
        ModelSpec::softmax(4, 3, 0.05),
        ModelSpec::mlp(4, 3, 5, Activation::Tanh, 0.05),
        ModelSpec::mlp(4, 3, 5, Activation::Relu, 0.05),
    ]
}

#[test]
fn logistic_zero_params_gives_ln2() {
    let spec = ModelSpec::logistic(3, 0.1);
    let params = ParamVector::zeros(spec.param_count());
    let x = [0.7, -2.0, 11.0];
    for y in 0..2 {
        let s = Sample { id: 0, features: &x, label: Label::Class(y) };
        let l = loss(&spec, &params, &s).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15, "{l}");
    }
}

#[test]
fn linear_exact_fit_has_zero_loss_and_grad() {
    let spec = ModelSpec::linear_mse(2, 0.0);
    let params = ParamVector::from_vec(vec![1.0, 0.0, 0.0]); // w = [1, 0], b = 0
    let x = [2.0, 3.0];
    let s = Sample { id: 0, features: &x, label: Label::Target(2.0) };
    assert_eq!(loss(&spec, &params, &s).unwrap(), 0.0);
    let g = grad(&spec, &params, &s).unwrap();
    assert!(g.as_slice().iter().all(|&v| v == 0.0), "{g:?}");
}

#[test]
fn logistic_zero_params_gradient_is_half_x() {
    let spec = ModelSpec::logistic(3, 0.0);
    let params = ParamVector::zeros(spec.param_count());
    let x = [0.4, -1.0, 2.0];
    let s = Sample { id: 0, features: &x, label: Label::Class(1) };
    let g = grad(&spec, &params, &s).unwrap();
    // weight block: row 0 = +0.5 x, row 1 = -0.5 x; biases [0.5, -0.5]
    for j in 0..3 {
        assert!((g[j] - 0.5 * x[j]).abs() < 1e-15);
        assert!((g[3 + j] + 0.5 * x[j]).abs() < 1e-15);
    }
    assert!((g[6] - 0.5).abs() < 1e-15);
    assert!((g[7] + 0.5).abs() < 1e-15);
}

// Frozen by an independent straight-line re-derivation of the forward pass
// (numpy): params[i] = 0.8 sin(1 + 0.37 i), x = [0.3, -1.2, 0.5], y = 2.
#[test]
fn mlp_forward_matches_independent_rederivation() {
    let x = [0.3, -1.2, 0.5];
    let s = Sample { id: 0, features: &x, label: Label::Class(2) };
    for (activation, expected) in [
        (Activation::Tanh, 0.548_349_806_757_236_1),
        (Activation::Relu, 1.380_799_372_319_452_3),
    ] {
        let spec = ModelSpec::mlp(3, 3, 4, activation, 0.0);
        let params = ParamVector::from_vec(
            (0..spec.param_count())
                .map(|i| 0.8 * (1.0 + 0.37 * i as f64).sin())
                .collect(),
        );
        let l = loss(&spec, &params, &s).unwrap();
        assert!((l - expected).abs() < 1e-12, "{activation:?}: {l} vs {expected}");
    }
}

#[test]
fn gradient_matches_finite_differences_all_kinds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in all_kinds() {
        for draw in 0..100 {
            let params = random_params(&spec, &mut rng);
            let ds = random_dataset(&spec, 1, &mut rng);
            let s = ds.sample(0);
            let g = grad(&spec, &params, &s).unwrap();
            let fd = fd_grad(&spec, &params, &s, 1e-5);
            let e = rel_err(g.as_slice(), fd.as_slice());
            assert!(e < 1e-5, "{:?} draw {draw}: rel err {e}", spec.kind);
        }
    }
}

#[test]
fn linear_rank_one_hvp() {
    let spec = ModelSpec::linear_mse(2, 0.0);
    let params = ParamVector::from_vec(vec![0.3, -0.7, 0.2]); // irrelevant for the quadratic
    let ds = Dataset::new(
        "one",
        Provenance::Synthetic,
        2,
        vec![1.0, 0.0],
        vec![Label::Target(0.5)],
        vec![0],
    )
    .unwrap();
    // per-sample Hessian is the outer product of (x, 1) = (1, 0, 1)
    let v = ParamVector::from_vec(vec![2.0, 5.0, 0.0]);
    let hv = hvp(&spec, &params, &ds, &v, 0.0).unwrap();
    assert_eq!(hv.as_slice(), &[2.0, 0.0, 2.0]);
    // with the bias coordinate engaged: t = v0 + v2
    let v = ParamVector::from_vec(vec![2.0, 5.0, 3.0]);
    let hv = hvp(&spec, &params, &ds, &v, 0.0).unwrap();
    assert_eq!(hv.as_slice(), &[5.0, 0.0, 5.0]);
}

#[test]
fn hvp_of_zero_vector_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in all_kinds() {
        let params = random_params(&spec, &mut rng);
        let ds = random_dataset(&spec, 4, &mut rng);
        let v = ParamVector::zeros(spec.param_count());
        let hv = hvp(&spec, &params, &ds, &v, 0.3).unwrap();
        assert!(hv.as_slice().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn hvp_matches_finite_difference_of_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in all_kinds() {
        let params = random_params(&spec, &mut rng);
        let ds = random_dataset(&spec, 10, &mut rng);
        for _ in 0..5 {
            let mut v = random_params(&spec, &mut rng);
            v.scale(1.0 / v.norm());
            let exact = hvp(&spec, &params, &ds, &v, 0.01).unwrap();
            let fd = fd_hvp(&spec, &params, &ds, &v, 0.01, 1e-4);
            let e = rel_err(exact.as_slice(), fd.as_slice());
            assert!(e < 1e-4, "{:?}: rel err {e}", spec.kind);
        }
    }
}

#[test]
fn hvp_is_symmetric_and_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for spec in all_kinds() {
        let params = random_params(&spec, &mut rng);
        let ds = random_dataset(&spec, 6, &mut rng);
        for _ in 0..20 {
            let u = random_params(&spec, &mut rng);
            let v = random_params(&spec, &mut rng);
            let hu = hvp(&spec, &params, &ds, &u, 0.05).unwrap();
            let hv = hvp(&spec, &params, &ds, &v, 0.05).unwrap();
            // symmetry
            let e = scalar_rel(u.dot(&hv), v.dot(&hu));
            assert!(e < 1e-10, "{:?}: symmetry rel err {e}", spec.kind);
            // linearity
            let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let mut comb = u.clone();
            comb.scale(alpha);
            comb.axpy(beta, &v);
            let h_comb = hvp(&spec, &params, &ds, &comb, 0.05).unwrap();
            let mut expect = hu.clone();
            expect.scale(alpha);
            expect.axpy(beta, &hv);
            let e = rel_err(h_comb.as_slice(), expect.as_slice());
            assert!(e < 1e-10, "{:?}: linearity rel err {e}", spec.kind);
        }
    }
}

#[test]
fn convex_kinds_with_ridge_are_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for spec in [ModelSpec::linear_mse(4, 0.1), ModelSpec::logistic(4, 0.1)] {
        let params = random_params(&spec, &mut rng);
        let ds = random_dataset(&spec, 8, &mut rng);
        for _ in 0..50 {
            let v = random_params(&spec, &mut rng);
            let quad = v.dot(&hvp(&spec, &params, &ds, &v, 0.0).unwrap());
            assert!(quad > 0.0, "{:?}: v^T H v = {quad}", spec.kind);
        }
    }
}

#[test]
fn ridge_enters_loss_grad_and_hvp() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let spec = ModelSpec::softmax(3, 3, 0.7);
    let plain = ModelSpec::softmax(3, 3, 0.0);
    let params = random_params(&spec, &mut rng);
    let ds = random_dataset(&spec, 3, &mut rng);
    let s = ds.sample(0);

    let with = loss(&spec, &params, &s).unwrap();
    let without = loss(&plain, &params, &s).unwrap();
    assert!((with - without - 0.35 * params.dot(&params)).abs() < 1e-12);

    let g_with = grad(&spec, &params, &s).unwrap();
    let mut g_expect = grad(&plain, &params, &s).unwrap();
    g_expect.axpy(0.7, &params);
    assert!(rel_err(g_with.as_slice(), g_expect.as_slice()) < 1e-14);

    let v = random_params(&spec, &mut rng);
    let h_with = hvp(&spec, &params, &ds, &v, 0.0).unwrap();
    let mut h_expect = hvp(&plain, &params, &ds, &v, 0.0).unwrap();
    h_expect.axpy(0.7, &v);
    assert!(rel_err(h_with.as_slice(), h_expect.as_slice()) < 1e-14);
}

#[test]
fn shape_and_label_errors_are_reported() {
    let spec = ModelSpec::softmax(3, 4, 0.0);
    let good = ParamVector::zeros(spec.param_count());
    let bad = ParamVector::zeros(spec.param_count() + 1);
    let x = [0.0, 1.0, 2.0];
    let s = Sample { id: 9, features: &x, label: Label::Class(1) };
    assert!(matches!(
        loss(&spec, &bad, &s),
        Err(Error::ShapeMismatch { context: "params", .. })
    ));

    let short = [0.0, 1.0];
    let s_short = Sample { id: 9, features: &short, label: Label::Class(1) };
    assert!(matches!(
        grad(&spec, &good, &s_short),
        Err(Error::ShapeMismatch { context: "sample features", .. })
    ));

    let s_big = Sample { id: 9, features: &x, label: Label::Class(4) };
    assert!(matches!(
        loss(&spec, &good, &s_big),
        Err(Error::LabelOutOfRange { label: 4, classes: 4, .. })
    ));

    let s_target = Sample { id: 9, features: &x, label: Label::Target(1.0) };
    assert!(matches!(
        loss(&spec, &good, &s_target),
        Err(Error::WrongLabelKind { expected: "class", .. })
    ));
}

#[test]
fn spec_validation_rules() {
    assert!(ModelSpec::linear_mse(0, 0.0).validate().is_err());
    assert!(ModelSpec::linear_mse(2, -0.1).validate().is_err());
    let mut bad = ModelSpec::logistic(2, 0.0);
    bad.output_dim = 3;
    assert!(bad.validate().is_err());
    let mut bad = ModelSpec::softmax(2, 3, 0.0);
    bad.hidden_dim = 4;
    assert!(bad.validate().is_err());
    let mut bad = ModelSpec::mlp(2, 3, 4, Activation::Tanh, 0.0);
    bad.activation = None;
    assert!(bad.validate().is_err());
    assert!(ModelSpec::mlp(2, 3, 4, Activation::Relu, 0.0).validate().is_ok());
}

#[test]
fn class_scores_agree_with_loss_argmin() {
    // the class with the highest logit has the smallest cross-entropy loss
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let spec = ModelSpec::mlp(3, 4, 5, Activation::Tanh, 0.0);
    let params = random_params(&spec, &mut rng);
    let ds = random_dataset(&spec, 1, &mut rng);
    let x = ds.feature_row(0);
    let scores = class_scores(&spec, &params, x).unwrap();
    let best = (0..4)
        .max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap())
        .unwrap();
    let losses: Vec<f64> = (0..4)
        .map(|c| {
            let s = Sample { id: 0, features: x, label: Label::Class(c) };
            loss(&spec, &params, &s).unwrap()
        })
        .collect();
    let min = (0..4)
        .min_by(|&a, &b| losses[a].partial_cmp(&losses[b]).unwrap())
        .unwrap();
    assert_eq!(best, min);
}

#[test]
fn param_counts() {
    assert_eq!(ModelSpec::linear_mse(5, 0.0).param_count(), 6);
    assert_eq!(ModelSpec::logistic(5, 0.0).param_count(), 12);
    assert_eq!(ModelSpec::softmax(5, 3, 0.0).param_count(), 18);
    assert_eq!(
        ModelSpec::mlp(5, 3, 7, Activation::Tanh, 0.0).param_count(),
        7 * 6 + 3 * 8
    );
}
