"""Release acceptance checks, one per criterion, each at its stated tolerance.

Run under pytest (a PASS/FAIL line per criterion is printed in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import CLI_CASES  # noqa: E402

from xai_audit.audit import RunConfig, consistency_sweep, cross_explain, performance_delta_summary  # noqa: E402
from xai_audit.cli import EXIT_OK, dispatch  # noqa: E402
from xai_audit.data import (  # noqa: E402
    SyntheticSpec,
    generate_synthetic,
    imbalance_degree,
    pearson_matrix,
    prune_correlated,
    split,
    standardize,
)
from xai_audit.explain import exact_shapley, kernel_shap, linear_shap_reference, toy_alignment_demo  # noqa: E402
from xai_audit.metrics import (  # noqa: E402
    ConfusionMatrix,
    evaluate,
    false_positive_rate_benign,
    matthews,
    mcc_guarantee_probe,
    score,
)
from xai_audit.mlp import gradient_check, init_params  # noqa: E402
from xai_audit.models import fit_dt, fit_mlp, fit_ridge  # noqa: E402
from xai_audit.tree import TreeParams, train_dt  # noqa: E402

RESULTS: list[str] = []


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}"
    RESULTS.append(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------


def test_01_metric_golden_values():
    cm = ConfusionMatrix(tp=504, fn=131, fp=27, tn=100508)
    ms = score(cm)
    fpr = false_positive_rate_benign(cm)
    ok = (abs(ms.accuracy - 0.9984383) <= 1e-6 and abs(ms.balanced_accuracy - 0.8967) <= 1e-4
          and abs(ms.mcc - 0.8672) <= 1e-4 and abs(fpr - 0.206) <= 1e-3)
    record(1, "metric golden values", ok,
           f"acc={ms.accuracy:.7f} BA={ms.balanced_accuracy:.5f} MCC={ms.mcc:.5f} FPR={fpr:.4f}")


# 2 ---------------------------------------------------------------------------


def test_02_mcc_extension_truth_table():
    bad = []
    for k in (1, 5, 1000):
        for cm, want in [((k, 0, 0, 0), 1.0), ((0, 0, 0, k), 1.0),
                         ((0, k, 0, 0), -1.0), ((0, 0, k, 0), -1.0)]:
            if matthews(ConfusionMatrix(*cm)) != want:
                bad.append(cm)
    # every other matrix over {0,1,2}^4 with a zero marginal must give exactly 0
    mixed = 0
    for cm in itertools.product(range(3), repeat=4):
        tp, fn, fp, tn = cm
        if sum(cm) == 0 or (tp + fp) * (tp + fn) * (fp + tn) * (tn + fn) != 0:
            continue
        if sum(v > 0 for v in cm) == 1:
            continue  # single nonzero cell: covered above
        mixed += 1
        if matthews(ConfusionMatrix(*cm)) != 0.0:
            bad.append(cm)
    record(2, "MCC extension truth table", not bad,
           f"12 single-cell cases and {mixed} mixed zero-denominator cases, {len(bad)} wrong")


# 3 ---------------------------------------------------------------------------

PUBLIC_DATASETS = [(61, 39, "Mild"), (99, 1, "Extreme"), (99.9, 0.1, "Extreme"), (17, 83, "Moderate"),
          (84, 16, "Moderate"), (81, 19, "Moderate"), (64, 36, "Mild"), (62, 38, "Mild"),
          (67, 33, "Mild"), (13, 87, "Severe"), (13, 87, "Severe"), (92, 8, "Severe")]


def test_03_imbalance_degrees():
    got = [imbalance_degree(max(a, b) / 100) for a, b, _ in PUBLIC_DATASETS]
    want = [d for *_, d in PUBLIC_DATASETS]
    hits = sum(g == w for g, w in zip(got, want))
    record(3, "imbalance severity labels", hits == 12, f"{hits}/12 rows match")


# 4 ---------------------------------------------------------------------------


def _fuzzed_model(rng, m):
    kind = rng.integers(4)
    if kind == 0:
        w = rng.normal(size=m)
        return lambda X: np.asarray(X) @ w
    if kind == 1:
        W1, W2 = rng.normal(size=(m, 6)), rng.normal(size=6)
        return lambda X: np.tanh(np.asarray(X) @ W1) @ W2
    if kind == 2:
        X = rng.normal(size=(120, m))
        y = (X[:, 0] * X[:, -1] + X[:, m // 2] > 0).astype(int)
        t = train_dt(X, y, TreeParams(max_depth=int(rng.integers(2, 6))))
        return t.predict_proba
    pairs = rng.integers(0, m, size=(3, 2))
    return lambda X: sum(np.asarray(X)[:, i] * np.asarray(X)[:, j] for i, j in pairs) + np.sin(
        np.asarray(X)[:, 0])


def test_04_kernel_shap_matches_exact():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(1, 9))
        f = _fuzzed_model(rng, m)
        B = rng.normal(size=(int(rng.integers(5, 40)), m))
        X = rng.normal(size=(2, m))
        ks = kernel_shap(f, B, X)
        for i in range(2):
            worst = max(worst, float(np.max(np.abs(ks.values[i] - exact_shapley(f, B, X[i])))))
    elapsed = time.perf_counter() - start
    record(4, "Kernel SHAP vs brute-force Shapley", worst <= 1e-6 and elapsed < 60,
           f"50 models, max |dev| = {worst:.2e}, {elapsed:.1f} s")


# 5 ---------------------------------------------------------------------------


def test_05_linear_shap_identity():
    d = generate_synthetic(SyntheticSpec(n_rows=3000), seed=5)
    tr, te = split(d, 0.15, 5)
    tr, te, _ = standardize(tr, te)
    model = fit_ridge(tr, standardize=False)
    B = tr.X[:100]
    X = te.X[:50]
    got = kernel_shap(model, B, X).values
    ref = linear_shap_reference(model.estimator.coefficients, B, X)
    dev = float(np.max(np.abs(got - ref)))
    record(5, "linear SHAP identity for ridge", dev <= 1e-6, f"max |dev| = {dev:.2e}")


# 6 ---------------------------------------------------------------------------


def test_06_mlp_gradient_check():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(10):
        d = int(rng.integers(2, 8))
        p = init_params(d, rng)
        for k in p:  # move biases off zero so every term is exercised
            p[k] = p[k] + 0.1 * rng.normal(size=p[k].shape)
        X = rng.normal(size=(int(rng.integers(4, 32)), d))
        y = rng.integers(0, 2, X.shape[0]).astype(float)
        worst = max(worst, max(gradient_check(p, X, y).values()))
    record(6, "MLP gradient vs central differences", worst <= 1e-4,
           f"10 draws, max relative error = {worst:.2e}")


# 7 ---------------------------------------------------------------------------


def test_07_toy_alignment():
    r = toy_alignment_demo(0.9, 0.1, 7.0)
    s, m = r.variants["step"], r.variants["smooth"]
    ok = (s.coefficient_top, s.gradient_top, m.coefficient_top, m.gradient_top) == ("T", "H", "T", "T")
    record(7, "toy coefficient/gradient alignment", ok,
           f"step {s.coefficient_top}/{s.gradient_top}, smooth {m.coefficient_top}/{m.gradient_top}")


# 8 ---------------------------------------------------------------------------

AUDIT_SPEC = SyntheticSpec(n_rows=20000, n_informative=3, n_noise=10, n_correlated_pairs=3,
                           positive_fraction=0.8, class_separation=4.0)


@pytest.mark.slow
def test_08_end_to_end_audit():
    start = time.perf_counter()
    d = generate_synthetic(AUDIT_SPEC, seed=0)
    tr, te = split(d, 0.15, 1)
    mccs = {}
    for kind, fit in (("dt", fit_dt), ("ridge", fit_ridge), ("mlp", fit_mlp)):
        model = fit(tr, seed=1)
        mccs[kind] = evaluate(te.y, model.predict_labels(te.X)).mcc
    good = cross_explain(d, ("ridge", "RIDGE_FC"), k=3, seed=0, repeats=10)
    noise = cross_explain(d, k=3, seed=0, repeats=10, features=("noise_0", "noise_1", "noise_2"))
    elapsed = time.perf_counter() - start
    ok = (min(mccs.values()) >= 0.95 and good.transferable
          and not noise.transferable and noise.receiver_scores.mcc < 0.5 and elapsed < 180)
    record(8, "end-to-end synthetic audit", ok,
           "MCC " + ", ".join(f"{k}={v:.4f}" for k, v in mccs.items())
           + f"; ridge/FC top {list(good.source.features)} mean MCC {good.receiver_scores.mcc:.4f}"
           + f"; noise top-3 mean MCC {noise.receiver_scores.mcc:.4f}; {elapsed:.0f} s")


# 9 ---------------------------------------------------------------------------


def test_09_correlation_pruning():
    spec = SyntheticSpec(n_rows=5000, n_informative=3, n_noise=4, n_correlated_pairs=4)
    d = generate_synthetic(spec, seed=9)
    res = prune_correlated(d, 0.95)
    planted = {f"corr_{i}_{s}" for i in range(4) for s in "ab"}
    cm = pearson_matrix(res.dataset)
    off = np.abs(np.where(np.eye(len(cm.names), dtype=bool) | cm.undefined, 0.0, cm.r))
    ok = planted <= set(res.removed) and float(off.max(initial=0.0)) < 0.95
    record(9, "correlation pruning", ok,
           f"removed {len(res.removed)} incl. all {len(planted)} planted, "
           f"max remaining |r| = {off.max(initial=0.0):.3f}")


# 10 --------------------------------------------------------------------------

SWEEP_SPEC = SyntheticSpec(n_rows=40000, n_informative=8, n_noise=2, n_correlated_pairs=0,
                           positive_fraction=0.5, class_separation=2.5)
# realized values of the reference run, pinned before release
PINNED_SWEEP = {"explanation_mean_jaccard": 0.27, "standard_metrics_max_delta": 0.001,
                "mcc_max_delta": 0.0013331114073334982}


@pytest.mark.slow
def test_10_consistency_phenomenon():
    d = generate_synthetic(SWEEP_SPEC, seed=7)
    base = RunConfig(model="mlp", method="SHAP_GLOBAL", seed=11, shap_instances=50)
    rep = consistency_sweep(d, base, [{}] * 4, seed_policy="derived")
    s = performance_delta_summary(rep)
    in_kind = (len(rep.runs) == 5 and s["explanation_mean_jaccard"] < 1
               and s["standard_metrics_max_delta"] <= 0.005 and s["mcc_max_delta"] <= 0.05)
    pinned = all(abs(s[k] - v) <= 1e-6 for k, v in PINNED_SWEEP.items())
    record(10, "consistency sweep (MLP + SHAP, 5 seeds)", in_kind and pinned,
           f"mean Jaccard {s['explanation_mean_jaccard']:.4f}, standard max delta "
           f"{s['standard_metrics_max_delta']:.6f}, MCC max delta {s['mcc_max_delta']:.6f}"
           + ("" if pinned else " (differs from pinned reference)"))


# 11 --------------------------------------------------------------------------


def _probe_oracle(threshold, max_small, tns):
    """Exhaustive search written straight from the definitions, no shared code."""
    out = set()
    for tn in tns:
        for tp, fn, fp in itertools.product(range(max_small + 1), repeat=3):
            den = (tp + fp) * (tp + fn) * (fp + tn) * (tn + fn)
            if den == 0:
                continue
            mcc = (tp * tn - fp * fn) / math.sqrt(den)
            if mcc < threshold:
                continue
            others = [tp / (tp + fp), tp / (tp + fn), (tp + tn) / (tp + fn + fp + tn),
                      0.5 * (tp / (tp + fn) + tn / (tn + fp)), 2 * tp / (2 * tp + fp + fn)]
            if min(others) < threshold:
                out.add((tp, fn, fp, tn))
    return out


def test_11_mcc_guarantee_probe():
    found = mcc_guarantee_probe(0.95, 20, [10**4, 10**6])
    got = {(c.matrix.tp, c.matrix.fn, c.matrix.fp, c.matrix.tn) for c in found}
    target = next((c for c in found if (c.matrix.tp, c.matrix.fn, c.matrix.fp, c.matrix.tn)
                   == (10, 0, 1, 10**6)), None)
    same = got == _probe_oracle(0.95, 20, [10**4, 10**6])
    ok = (bool(found) and same and target is not None
          and target.metrics.mcc >= 0.95 and target.metrics.precision < 0.95)
    detail = f"{len(found)} counterexamples, equal to exhaustive oracle: {same}"
    if target is not None:
        detail += (f"; (tp,fn,fp,tn)=(10,0,1,10^6) has MCC {target.metrics.mcc:.4f}, "
                   f"precision {target.metrics.precision:.4f}")
    record(11, "MCC guarantee probe", ok, detail)


# 12 --------------------------------------------------------------------------


def test_12_cli_reproducibility():
    differing, failed = [], []
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in sorted(CLI_CASES.items()):
            outs = []
            for rep in ("a", "b"):
                out = Path(tmp) / name / rep
                if dispatch([*argv, "--out", str(out)]) != EXIT_OK:
                    failed.append(name)
                outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.json"))})
            if not outs[0] or outs[0] != outs[1]:
                differing.append(name)
    ok = not differing and not failed
    record(12, "CLI byte-identical reruns", ok,
           f"{len(CLI_CASES)} subcommands, differing={differing or 'none'}, "
           f"failed={sorted(set(failed)) or 'none'}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failures += 1
    print("\n".join(RESULTS))
    sys.exit(1 if failures else 0)
