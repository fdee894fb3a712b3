#!/usr/bin/env python3
"""Build the datadrop_py extension, import it, and drive the whole flow:
synthesize noisy data, train, score, drop, retrain, and cross-check the
influence scores against leave-one-out retraining on a tiny instance.

Usage:
    python3 python/smoke_test.py [--release] [--skip-build]
"""

import argparse
import pathlib
import shutil
import subprocess
import sys
import tempfile

REPO = pathlib.Path(__file__).resolve().parent.parent


def build_extension(release: bool, skip_build: bool) -> pathlib.Path:
    profile = "release" if release else "debug"
    if not skip_build:
        cmd = ["cargo", "build", "-p", "datadrop-py"]
        if release:
            cmd.append("--release")
        subprocess.run(cmd, cwd=REPO, check=True)
    built = REPO / "target" / profile / "libdatadrop_py.so"
    if not built.exists():  # macOS fallback
        built = REPO / "target" / profile / "libdatadrop_py.dylib"
    if not built.exists():
        sys.exit(f"extension not found at {built}; build it first")
    stage = pathlib.Path(tempfile.mkdtemp(prefix="datadrop_py_"))
    target = stage / "datadrop_py.so"
    shutil.copyfile(built, target)
    return stage


def approx_equal(a, b, tol=1e-12):
    return abs(a - b) <= tol * (1.0 + abs(a) + abs(b))


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--release", action="store_true")
    parser.add_argument("--skip-build", action="store_true")
    args = parser.parse_args()

    sys.path.insert(0, str(build_extension(args.release, args.skip_build)))
    import datadrop_py as dd

    checks = 0

    def ok(condition, message):
        nonlocal checks
        checks += 1
        if not condition:
            sys.exit(f"FAIL: {message}")
        print(f"ok  {message}")

    # --- data generation and splitting -----------------------------------
    clean, empty_truth = dd.synth_blobs(625, 2, 3, 2.25, 0.0, seed=7)
    ok(len(clean) == 625 and len(empty_truth) == 0, "blobs without flips have empty truth")

    train_clean, val = dd.split(clean, 0.2, seed=11, stratified=False)
    ok((len(train_clean), len(val)) == (500, 125), "80/20 split sizes")

    noisy, truth = dd.plant_label_noise(train_clean, 0.1, seed=13)
    ok(len(truth) == 50, "floor(0.1 * 500) labels flipped")
    flipped = set(truth.flipped_ids)

    # --- training and evaluation ------------------------------------------
    spec = dd.ModelSpec.softmax(2, 3, l2_reg=0.05)
    ok(spec.param_count() == 9, "softmax(2 -> 3) has 9 parameters")

    cfg = dd.TrainConfig(
        epochs=250,
        batch_size=32,
        lr_schedule=[(0, 0.5), (150, 0.1), (220, 0.02)],
        momentum=0.9,
        seed=5,
    )
    params = dd.train(spec, noisy, cfg)
    params_again = dd.train(spec, noisy, cfg)
    ok(params == params_again, "training is bit-deterministic")

    # overlapping clusters plus 10% label noise: well above the 1/3 chance
    # rate is what convergence looks like here
    metrics = dd.evaluate(spec, params, val)
    ok(metrics.accuracy is not None and metrics.accuracy > 0.65,
       f"round-1 validation accuracy {metrics.accuracy:.3f}")

    # --- scoring -----------------------------------------------------------
    ihvp = dd.IhvpConfig(method="cg", damping=0.01)
    report = dd.score_all(spec, params, noisy, val, ihvp)
    ok(report.solve_count == len(val), "exactly one inverse-HVP solve per validation sample")
    ok(len(report.residuals) == len(val) and max(report.residuals) < 1e-6,
       f"solve residuals bounded (max {max(report.residuals):.2e})")
    ok(len(report.scores()) == len(noisy), "one score per training sample")

    parallel = dd.score_all(spec, params, noisy, val, ihvp, workers=3)
    ok(report.totals() == parallel.totals(), "worker count does not change scores")

    dropped = set(report.unfavorable_ids())
    ok(dropped == {i for i, t in report.scores() if t > 0.0},
       "unfavorable = strictly positive totals")
    if dropped:
        precision = len(dropped & flipped) / len(dropped)
        ok(precision >= 0.2, f"flagged-set precision {precision:.2f} >= 2x base rate")

    # --- two-round flow ----------------------------------------------------
    result = dd.two_round(spec, noisy, val, cfg, ihvp)
    ok(result.reduced_train_size == len(noisy) - len(result.dropped_ids),
       "reduced size bookkeeping")
    ok(result.dropped_ids == sorted(dropped),
       "pipeline drops the same ids as standalone scoring")
    ok(result.metrics_round2.mean_loss <= result.metrics_round1.mean_loss,
       f"validation loss {result.metrics_round1.mean_loss:.4f} -> {result.metrics_round2.mean_loss:.4f}")

    jsonl = result.report.to_jsonl()
    ok(jsonl.count("\n") == len(noisy) + 1, "report serializes to header + n records")

    counts = dd.multi_round(spec, noisy, val, cfg, ihvp, 3)
    ok(1 <= len(counts) <= 3 and counts[0] == len(result.dropped_ids),
       f"multi-round counts {counts} start with the two-round drop count")

    # --- influence vs leave-one-out on a tiny instance ---------------------
    small_clean, _ = dd.synth_blobs(40, 2, 2, 2.0, 0.0, seed=404)
    small_train0, small_val = dd.split(small_clean, 0.25, seed=11)
    small_train, _ = dd.plant_label_noise(small_train0, 0.1, seed=17)
    small_spec = dd.ModelSpec.logistic(2, l2_reg=0.05)
    theta, deltas = dd.loo_deltas(small_spec, small_train, small_val)
    ok(all(conv for (_, _, conv) in deltas), "all leave-one-out retrains converged")

    exact = dd.IhvpConfig(method="cg", damping=0.0, cg_tol=1e-10)
    small_report = dd.score_all(small_spec, theta, small_train, small_val, exact)
    rho = dd.spearman(small_report.totals(), [d for (_, d, _) in deltas])
    ok(rho >= 0.9, f"influence totals track leave-one-out deltas (spearman {rho:.4f})")

    # --- gradients through the bindings ------------------------------------
    g = dd.grad(small_spec, theta, small_train.features(0), small_train.label(0))
    ok(len(g) == small_spec.param_count(), "per-sample gradient has param_count entries")
    l = dd.loss(small_spec, theta, small_train.features(0), small_train.label(0))
    ok(l >= 0.0, f"per-sample loss is non-negative ({l:.4f})")

    print(f"\nsmoke test passed ({checks} checks)")


if __name__ == "__main__":
    main()
