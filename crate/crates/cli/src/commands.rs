//! The five subcommands.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use datadrop::data::{save_checkpoint, CheckpointMeta};
use datadrop::influence::{score_all_with, ScoreOptions};
use datadrop::loo::{compare_with_report, loo_deltas};
use datadrop::model::{self, ModelSpec};
use datadrop::pipeline::{
    run_rounds, two_round_with, write_multi_round_dir, write_two_round_dir, PipelineOptions,
};
use datadrop::trainer::{evaluate, objective_spec, train as train_model, FullBatchConfig, TrainConfig};
use datadrop::{Dataset, Error, IhvpConfig, ParamVector};

use crate::config::{load_data, resolve, FileConfig, Resolved};
use crate::manifest::file_checksum;
use crate::{CheckArgs, CliError, Ctx, LooArgs, ScoreArgs, TrainArgs, TwoRoundArgs};

fn prepare_out(dir: &Path, overwrite: bool) -> Result<(), CliError> {
    if dir.exists() {
        let occupied = std::fs::read_dir(dir)
            .map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?
            .next()
            .is_some();
        if occupied && !overwrite {
            return Err(CliError::config(format!(
                "output directory {} is not empty (use --overwrite)",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))
}

/// Record a data source in the manifest: file checksum for paths, dataset
/// checksum for synthetic descriptors.
fn record_input(ctx: &mut Ctx, source: &str, dataset: &Dataset) {
    let value = if source.starts_with("synth:") {
        dataset.checksum()
    } else if let Some(rest) = source.strip_prefix("idx:") {
        rest.split(',')
            .map(|p| file_checksum(Path::new(p)).unwrap_or_else(|e| format!("unreadable: {e}")))
            .collect::<Vec<_>>()
            .join(",")
    } else {
        file_checksum(Path::new(source)).unwrap_or_else(|e| format!("unreadable: {e}"))
    };
    ctx.input_checksums.insert(source.to_string(), value);
}

fn snapshot(ctx: &mut Ctx, resolved: &Resolved) {
    ctx.config_snapshot = serde_json::to_value(resolved).unwrap_or(serde_json::Value::Null);
}

pub fn train(args: &TrainArgs, file: &FileConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let resolved = resolve(&args.shared.common(), file)?;
    let spec = resolved
        .spec
        .clone()
        .ok_or_else(|| CliError::config("--spec is required for train".into()))?;
    prepare_out(&args.out, args.overwrite)?;
    ctx.out_dir = Some(args.out.clone());
    snapshot(ctx, &resolved);

    let data = load_data(&args.data, &resolved, Some(&spec), 11)?;
    record_input(ctx, &args.data, &data);

    let params = train_model(&spec, &data, &resolved.train).map_err(CliError::from_core)?;
    let spec_eff = objective_spec(&spec, &resolved.train);
    let ckpt = args.out.join("model.ckpt");
    save_checkpoint(
        &ckpt,
        &spec_eff,
        &params,
        &CheckpointMeta {
            seed: resolved.seed,
            config: serde_json::to_value(&resolved.train).unwrap_or(serde_json::Value::Null),
            dataset_checksum: data.checksum(),
        },
    )
    .map_err(CliError::from_core)?;
    ctx.output_paths.push(ckpt.clone());
    ctx.output_paths.push(datadrop::data::sidecar_path(&ckpt));

    let metrics = evaluate(&spec_eff, &params, &data).map_err(CliError::from_core)?;
    println!(
        "trained {} samples; training loss {:.6}{}",
        data.len(),
        metrics.mean_loss,
        metrics
            .accuracy
            .map(|a| format!(", accuracy {a:.4}"))
            .unwrap_or_default()
    );
    println!("checkpoint: {}", ckpt.display());
    Ok(())
}

pub fn score(args: &ScoreArgs, file: &FileConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let resolved = resolve(&args.shared.common(), file)?;
    prepare_out(&args.out, args.overwrite)?;
    ctx.out_dir = Some(args.out.clone());
    snapshot(ctx, &resolved);

    let (spec, params) =
        datadrop::data::load_checkpoint(&args.checkpoint).map_err(CliError::from_core)?;
    ctx.input_checksums.insert(
        args.checkpoint.display().to_string(),
        file_checksum(&args.checkpoint).unwrap_or_else(|e| format!("unreadable: {e}")),
    );
    let train_set = load_data(&args.train_data, &resolved, Some(&spec), 12)?;
    record_input(ctx, &args.train_data, &train_set);
    let val_set = load_data(&args.val_data, &resolved, Some(&spec), 13)?;
    record_input(ctx, &args.val_data, &val_set);

    let options = ScoreOptions {
        workers: resolved.workers,
        keep_per_validation: args.per_validation,
        ..Default::default()
    };
    let report = score_all_with(&spec, &params, &train_set, &val_set, &resolved.ihvp, &options)
        .map_err(CliError::from_core)?;

    let out = args.out.join("influence.jsonl");
    report.write_jsonl_file(&out).map_err(CliError::from_core)?;
    ctx.output_paths.push(out.clone());

    let unfavorable = datadrop::influence::select_unfavorable(&report);
    let worst = report.ihvp_residuals.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "scored {} training samples against {} validation samples (max solve residual {worst:.3e})",
        report.scores.len(),
        report.ihvp_solve_count,
    );
    println!("unfavorable: {} of {}", unfavorable.len(), report.scores.len());
    println!("report: {}", out.display());
    Ok(())
}

pub fn two_round(args: &TwoRoundArgs, file: &FileConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let resolved = resolve(&args.shared.common(), file)?;
    let spec = resolved
        .spec
        .clone()
        .ok_or_else(|| CliError::config("--spec is required for two-round".into()))?;
    prepare_out(&args.out, args.overwrite)?;
    ctx.out_dir = Some(args.out.clone());
    snapshot(ctx, &resolved);

    let train_set = load_data(&args.data, &resolved, Some(&spec), 11)?;
    record_input(ctx, &args.data, &train_set);
    let val_set = match &args.val_data {
        Some(source) => {
            let ds = load_data(source, &resolved, Some(&spec), 13)?;
            record_input(ctx, source, &ds);
            Some(ds)
        }
        None => None,
    };

    let options = PipelineOptions {
        val_fraction: resolved.val_fraction,
        round2_seed: None,
        score: ScoreOptions { workers: resolved.workers, ..Default::default() },
    };

    if resolved.rounds == 2 {
        let result = two_round_with(
            &spec,
            &train_set,
            val_set.as_ref(),
            &resolved.train,
            &resolved.ihvp,
            &options,
        );
        match result {
            Ok(result) => {
                let paths = write_two_round_dir(
                    &args.out,
                    &spec,
                    &resolved.train,
                    &result,
                    &train_set.checksum(),
                )
                .map_err(CliError::from_core)?;
                ctx.output_paths.extend(paths.files);
                println!(
                    "round 1: loss {:.6}{} | dropped {} of {} | round 2: loss {:.6}{}",
                    result.metrics_round1.mean_loss,
                    result
                        .metrics_round1
                        .accuracy
                        .map(|a| format!(" acc {a:.4}"))
                        .unwrap_or_default(),
                    result.dropped_ids.len(),
                    result.reduced_train_size + result.dropped_ids.len(),
                    result.metrics_round2.mean_loss,
                    result
                        .metrics_round2
                        .accuracy
                        .map(|a| format!(" acc {a:.4}"))
                        .unwrap_or_default(),
                );
                Ok(())
            }
            Err(Error::EmptyReducedSet { report }) => {
                // the report is still written so the run can be audited
                let out = args.out.join("influence.jsonl");
                report.write_jsonl_file(&out).map_err(CliError::from_core)?;
                ctx.output_paths.push(out);
                Err(CliError::numeric(
                    "data dropout removed every training sample (report written)".into(),
                ))
            }
            Err(e) => Err(CliError::from_core(e)),
        }
    } else {
        let outcomes = run_rounds(
            &spec,
            &train_set,
            val_set.as_ref(),
            &resolved.train,
            &resolved.ihvp,
            resolved.rounds,
            &options,
        );
        match outcomes {
            Ok(outcomes) => {
                let paths = write_multi_round_dir(
                    &args.out,
                    &spec,
                    &resolved.train,
                    &outcomes,
                    &train_set.checksum(),
                )
                .map_err(CliError::from_core)?;
                ctx.output_paths.extend(paths.files);
                let counts: Vec<usize> = outcomes.iter().map(|o| o.dropped.len()).collect();
                println!("unfavorable per round: {counts:?}");
                Ok(())
            }
            Err(Error::EmptyReducedSet { report }) => {
                let out = args.out.join("influence.jsonl");
                report.write_jsonl_file(&out).map_err(CliError::from_core)?;
                ctx.output_paths.push(out);
                Err(CliError::numeric(
                    "data dropout removed every training sample (report written)".into(),
                ))
            }
            Err(e) => Err(CliError::from_core(e)),
        }
    }
}

#[derive(Serialize)]
struct LooRecord {
    id: u64,
    delta: f64,
    converged: bool,
    influence_total: f64,
}

pub fn loo_oracle(args: &LooArgs, file: &FileConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let resolved = resolve(&args.shared.common(), file)?;
    let spec = resolved
        .spec
        .clone()
        .ok_or_else(|| CliError::config("--spec is required for loo-oracle".into()))?;
    prepare_out(&args.out, args.overwrite)?;
    ctx.out_dir = Some(args.out.clone());
    snapshot(ctx, &resolved);

    let full = load_data(&args.data, &resolved, Some(&spec), 11)?;
    record_input(ctx, &args.data, &full);
    let (train_set, val_set) = match &args.val_data {
        Some(source) => {
            let val = load_data(source, &resolved, Some(&spec), 13)?;
            record_input(ctx, source, &val);
            (full, val)
        }
        None => datadrop::data::split(
            &full,
            resolved.val_fraction,
            resolved.seed,
            full.is_classification(),
        )
        .map_err(CliError::from_core)?,
    };

    if train_set.len() > args.max_samples && !args.force {
        return Err(CliError::config(format!(
            "{} retrains requested, cap is {} (use --force to override)",
            train_set.len(),
            args.max_samples
        )));
    }

    let spec_eff = objective_spec(&spec, &resolved.train);
    let optimizer = FullBatchConfig::default();
    let (theta, deltas) =
        loo_deltas(&spec_eff, &train_set, &val_set, &optimizer).map_err(CliError::from_core)?;

    let options = ScoreOptions { workers: resolved.workers, ..Default::default() };
    let report = score_all_with(&spec_eff, &theta, &train_set, &val_set, &resolved.ihvp, &options)
        .map_err(CliError::from_core)?;

    let threshold = 10.0 * optimizer.grad_tol;
    let summary = compare_with_report(&deltas, &report, threshold);

    let influence_path = args.out.join("influence.jsonl");
    report.write_jsonl_file(&influence_path).map_err(CliError::from_core)?;
    ctx.output_paths.push(influence_path);

    let loo_path = args.out.join("loo.jsonl");
    {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&loo_path).map_err(|e| CliError::numeric(e.to_string()))?,
        );
        let header = json!({
            "n": deltas.len(),
            "threshold": threshold,
            "summary": summary,
        });
        writeln!(w, "{header}").map_err(|e| CliError::numeric(e.to_string()))?;
        for d in &deltas {
            let total = report
                .scores
                .iter()
                .find(|s| s.sample_id == d.id)
                .map(|s| s.total)
                .unwrap_or(f64::NAN);
            let record = LooRecord {
                id: d.id,
                delta: d.delta,
                converged: d.converged,
                influence_total: total,
            };
            writeln!(w, "{}", serde_json::to_string(&record).unwrap())
                .map_err(|e| CliError::numeric(e.to_string()))?;
        }
    }
    ctx.output_paths.push(loo_path);

    let summary_path = args.out.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap())
        .map_err(|e| CliError::numeric(e.to_string()))?;
    ctx.output_paths.push(summary_path);

    println!(
        "leave-one-out over {} samples: spearman {:.4}, sign agreement {:.3} ({} compared, {} non-converged excluded)",
        deltas.len(),
        summary.spearman,
        summary.sign_agreement,
        summary.n_compared,
        deltas.iter().filter(|d| !d.converged).count(),
    );
    Ok(())
}

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

pub fn check(args: &CheckArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    use datadrop::data::{Label, Provenance};
    use rand_support::*;

    let seed = args.seed.unwrap_or(0);
    if let Some(out) = &args.out {
        prepare_out(out, true)?;
        ctx.out_dir = Some(out.clone());
    }
    ctx.config_snapshot = json!({ "seed": seed, "inject_fault": args.inject_fault });

    let mut checks: Vec<Check> = Vec::new();
    let specs = [
        ModelSpec::linear_mse(3, 0.05),
        ModelSpec::logistic(3, 0.05),
        ModelSpec::softmax(3, 4, 0.05),
        ModelSpec::mlp(3, 3, 4, datadrop::Activation::Tanh, 0.05),
        ModelSpec::mlp(3, 3, 4, datadrop::Activation::Relu, 0.05),
    ];

    // gradient vs central differences
    for (idx, spec) in specs.iter().enumerate() {
        let mut state = seed ^ (idx as u64 + 1);
        let params = rand_params(spec, &mut state);
        let ds = rand_dataset(spec, 4, &mut state);
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            let sample = ds.sample(i);
            let mut g = model::grad(spec, &params, &sample).unwrap();
            if args.inject_fault && idx == 0 {
                let v = g[0] + 1e-3;
                g.as_mut_slice()[0] = v;
            }
            let fd = fd_grad(spec, &params, &sample);
            worst = worst.max(rel_err(g.as_slice(), fd.as_slice()));
        }
        checks.push(Check {
            name: format!("gradient-fd-{}", kind_name(spec)),
            passed: worst < 1e-5,
            detail: format!("max rel err {worst:.2e}"),
        });
    }

    // hvp vs finite differences of the gradient, symmetry, linearity
    for (idx, spec) in specs.iter().enumerate() {
        let mut state = seed ^ (0x100 + idx as u64);
        let params = rand_params(spec, &mut state);
        let ds = rand_dataset(spec, 6, &mut state);
        let v = rand_params(spec, &mut state);
        let u = rand_params(spec, &mut state);
        let hv = model::hvp(spec, &params, &ds, &v, 0.05).unwrap();
        let hu = model::hvp(spec, &params, &ds, &u, 0.05).unwrap();
        let fd = fd_hvp(spec, &params, &ds, &v, 0.05);
        let fd_err = rel_err(hv.as_slice(), fd.as_slice());
        let sym = (u.dot(&hv) - v.dot(&hu)).abs()
            / (u.dot(&hv).abs().max(v.dot(&hu).abs()) + 1e-30);
        checks.push(Check {
            name: format!("hvp-{}", kind_name(spec)),
            passed: fd_err < 1e-4 && sym < 1e-10,
            detail: format!("fd {fd_err:.2e}, symmetry {sym:.2e}"),
        });
    }

    // conjugate gradient on known operators
    {
        let v = ParamVector::from_vec(vec![3.0, -1.0, 2.0]);
        let identity = datadrop::ihvp::solve_cg(
            |u: &ParamVector| Ok(u.clone()),
            &v,
            &IhvpConfig::default(),
        )
        .unwrap();
        checks.push(Check {
            name: "cg-identity-one-iteration".into(),
            passed: identity.iterations == 1 && identity.residual < 1e-12,
            detail: format!("iters {}, residual {:.2e}", identity.iterations, identity.residual),
        });

        let diag = [2.0, 4.0, 8.0];
        let sol = datadrop::ihvp::solve_cg(
            |u: &ParamVector| {
                Ok(ParamVector::from_vec(
                    u.as_slice().iter().zip(diag).map(|(x, d)| x * d).collect(),
                ))
            },
            &ParamVector::from_vec(vec![2.0, 4.0, 8.0]),
            &IhvpConfig::default(),
        )
        .unwrap();
        let err = sol
            .solution
            .as_slice()
            .iter()
            .map(|x| (x - 1.0).abs())
            .fold(0.0f64, f64::max);
        checks.push(Check {
            name: "cg-diagonal-solve".into(),
            passed: err < 1e-10,
            detail: format!("max coordinate err {err:.2e}"),
        });
    }

    // cg on a live logistic Hessian
    {
        let spec = ModelSpec::logistic(3, 0.05);
        let mut state = seed ^ 0x200;
        let params = rand_params(&spec, &mut state);
        let ds = rand_dataset(&spec, 12, &mut state);
        let v = rand_params(&spec, &mut state);
        let res = datadrop::ihvp::solve_cg(
            |u: &ParamVector| model::hvp(&spec, &params, &ds, u, 0.01),
            &v,
            &IhvpConfig::default(),
        )
        .unwrap();
        checks.push(Check {
            name: "cg-logistic-residual".into(),
            passed: res.residual < 1e-6,
            detail: format!("residual {:.2e}", res.residual),
        });
    }

    // stochastic estimation fixed point on an identity Hessian
    {
        let v = ParamVector::from_vec(vec![0.5, -1.5]);
        let config = IhvpConfig {
            damping: 0.0,
            lissa_scale: 1.0,
            lissa_depth: 500,
            lissa_repeats: 1,
            ..IhvpConfig::default()
        };
        let res =
            datadrop::ihvp::solve_lissa(|_: &[usize], u: &ParamVector| Ok(u.clone()), 1, &v, &config)
                .unwrap();
        checks.push(Check {
            name: "lissa-identity-fixed-point".into(),
            passed: !res.diverged && res.residual < 1e-10,
            detail: format!("residual {:.2e}", res.residual),
        });
    }

    // deterministic training
    {
        let ds = Dataset::new(
            "det",
            Provenance::Synthetic,
            1,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![
                Label::Class(0),
                Label::Class(0),
                Label::Class(1),
                Label::Class(1),
            ],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let spec = ModelSpec::logistic(1, 0.01);
        let cfg = TrainConfig { epochs: 10, batch_size: 2, seed, ..Default::default() };
        let a = train_model(&spec, &ds, &cfg).unwrap();
        let b = train_model(&spec, &ds, &cfg).unwrap();
        checks.push(Check {
            name: "training-determinism".into(),
            passed: a == b,
            detail: "two identical runs".into(),
        });
    }

    let mut all_ok = true;
    for c in &checks {
        let verdict = if c.passed { "ok" } else { "FAIL" };
        println!("check {:32} {:4} ({})", c.name, verdict, c.detail);
        all_ok &= c.passed;
    }
    println!(
        "{} of {} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    );

    if let Some(out) = &args.out {
        let results: Vec<serde_json::Value> = checks
            .iter()
            .map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail }))
            .collect();
        let path = out.join("check.json");
        std::fs::write(&path, serde_json::to_string_pretty(&results).unwrap())
            .map_err(|e| CliError::numeric(e.to_string()))?;
        ctx.output_paths.push(path);
    }

    if all_ok {
        Ok(())
    } else {
        Err(CliError { code: 3, message: "self-test failure".into() })
    }
}

fn kind_name(spec: &ModelSpec) -> String {
    match (spec.kind, spec.activation) {
        (datadrop::ModelKind::LinearMse, _) => "linear-mse".into(),
        (datadrop::ModelKind::Logistic, _) => "logistic".into(),
        (datadrop::ModelKind::Softmax, _) => "softmax".into(),
        (datadrop::ModelKind::Mlp, Some(datadrop::Activation::Tanh)) => "mlp-tanh".into(),
        (datadrop::ModelKind::Mlp, _) => "mlp-relu".into(),
    }
}

/// Self-contained numeric helpers for `check`; deliberately independent of
/// the test suites so the installed binary can audit itself.
mod rand_support {
    use datadrop::data::{Dataset, Label, Provenance, Sample};
    use datadrop::model::{self, ModelSpec};
    use datadrop::ParamVector;

    // xorshift-style generator: good enough for check inputs, dependency-free
    fn next(state: &mut u64) -> f64 {
        let mut x = *state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        *state = x;
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn rand_params(spec: &ModelSpec, state: &mut u64) -> ParamVector {
        ParamVector::from_vec((0..spec.param_count()).map(|_| 0.6 * next(state)).collect())
    }

    pub fn rand_dataset(spec: &ModelSpec, n: usize, state: &mut u64) -> Dataset {
        let d = spec.input_dim;
        let features: Vec<f64> = (0..n * d).map(|_| 1.2 * next(state)).collect();
        let labels: Vec<Label> = (0..n)
            .map(|i| {
                if spec.is_classifier() {
                    Label::Class(i % spec.output_dim)
                } else {
                    Label::Target(next(state))
                }
            })
            .collect();
        Dataset::new("check", Provenance::Synthetic, d, features, labels, (0..n as u64).collect())
            .unwrap()
    }

    pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / (norm + 1e-12)
    }

    pub fn fd_grad(spec: &ModelSpec, params: &ParamVector, sample: &Sample<'_>) -> ParamVector {
        let eps = 1e-5;
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

    pub fn fd_hvp(
        spec: &ModelSpec,
        params: &ParamVector,
        ds: &Dataset,
        v: &ParamVector,
        damping: f64,
    ) -> ParamVector {
        let eps = 1e-4;
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
}
