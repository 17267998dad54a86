"""Experiment protocols: top-k extraction, cross-explanations and consistency sweeps.

A *run* is one end-to-end pass over a dataset: stratified split, fit, score on
the held-out partition, explain, take the top-k features. Every random stream
in a run is derived from the run seed with a fixed key (see
:mod:`xai_audit.seeding`), so a run is a pure function of (dataset, config).
"""

from __future__ import annotations

import dataclasses
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from . import seeding
from .data import Dataset, split
from .errors import AuditError, ConfigError, DataError
from .explain import global_shap_importance, kernel_shap, permutation_importance
from .importance import ImportanceVector
from .metrics import METRIC_NAMES, STANDARD_METRICS, MetricSet, evaluate
from .mlp import MlpHyper
from .models import MODEL_KINDS, TrainedModel, dt_importances, fit_model, ridge_coefficients
from .tree import TreeParams

SCHEMA_VERSION = 1
TRANSFER_MCC = 0.95

APPLICABLE = {
    "dt": ("DT_FI", "PI", "SHAP_GLOBAL"),
    "ridge": ("RIDGE_FC", "PI", "SHAP_GLOBAL"),
    "mlp": ("PI", "SHAP_GLOBAL"),
}


# ---------------------------------------------------------------------------
# top-k


@dataclass(frozen=True)
class TopKSet:
    k: int
    features: tuple[str, ...]
    source: Mapping[str, Any] = field(default_factory=dict)
    clamped: bool = False

    def to_dict(self) -> dict:
        return {"k": self.k, "features": list(self.features), "source": dict(self.source),
                "clamped": self.clamped}


def top_k(v: ImportanceVector, k: int = 3, source: Mapping[str, Any] | None = None) -> TopKSet:
    """Up to ``k`` features by descending |score|; zero-scored features never make the cut."""
    if k < 1:
        raise ConfigError("k must be at least 1")
    clamped = k > len(v.feature_names)
    if clamped:
        warnings.warn(f"k={k} exceeds the {len(v.feature_names)} available features; clamping",
                      stacklevel=2)
    chosen = [i for i in v.ranking() if v.scores[i] != 0][:k]
    src = {"method": v.method, **(source or {})}
    return TopKSet(k, tuple(v.feature_names[i] for i in chosen), src, clamped)


def jaccard(a: Sequence[str], b: Sequence[str]) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class RunConfig:
    model: str = "dt"
    method: str = "DT_FI"
    seed: int = 0
    test_fraction: float = 0.15
    k: int = 3
    # dt
    criterion: str = "gini"
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    # ridge
    alpha: float = 1.0
    # mlp
    optimizer: str = "rmsprop"
    learning_rate: float = 0.001
    batch_size: int = 256
    epochs: int = 5
    # explainers
    pi_metric: str = "mcc"
    pi_repeats: int = 10
    pi_on: str = "test"
    shap_background: int = 100
    shap_instances: int = 50
    shap_samples: int = 2048

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r}; expected one of {MODEL_KINDS}")
        if self.method not in APPLICABLE[self.model]:
            raise ConfigError(
                f"method {self.method} is not applicable to {self.model}; "
                f"choose from {APPLICABLE[self.model]}"
            )
        if self.pi_on not in ("test", "train"):
            raise ConfigError("pi_on must be 'test' or 'train'")
        if self.pi_metric not in METRIC_NAMES:
            raise ConfigError(f"unknown metric {self.pi_metric!r}")

    def replace(self, **delta) -> "RunConfig":
        unknown = set(delta) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **delta)

    def tree_params(self) -> TreeParams:
        return TreeParams(self.criterion, self.max_depth, self.min_samples_split, self.seed)

    def mlp_hyper(self) -> MlpHyper:
        return MlpHyper(self.optimizer, self.learning_rate, self.batch_size, self.epochs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class RunResult:
    config: RunConfig
    model: TrainedModel
    metrics: MetricSet
    importance: ImportanceVector
    top: TopKSet


def train_and_score(d: Dataset, cfg: RunConfig):
    train, test = split(d, cfg.test_fraction, seeding.derive_seed(cfg.seed, seeding.SPLIT))
    model = fit_model(cfg.model, train, seeding.derive_seed(cfg.seed, seeding.MODEL),
                      tree_params=cfg.tree_params(), alpha=cfg.alpha, hyper=cfg.mlp_hyper())
    return model, train, test, evaluate(test.y, model.predict_labels(test.X))


def explain_model(model: TrainedModel, method: str, train: Dataset, test: Dataset,
                  cfg: RunConfig) -> ImportanceVector:
    if method == "DT_FI":
        return dt_importances(model)
    if method == "RIDGE_FC":
        return ridge_coefficients(model)
    if method == "PI":
        data = test if cfg.pi_on == "test" else train
        return permutation_importance(model, data, cfg.pi_metric, cfg.pi_repeats,
                                      seeding.derive_seed(cfg.seed, seeding.PERMUTATION))
    if method == "SHAP_GLOBAL":
        rng = np.random.default_rng(seeding.derive_seed(cfg.seed, seeding.SHAP_INSTANCES))
        n = min(cfg.shap_instances, test.n_rows)
        rows = np.sort(rng.choice(test.n_rows, size=n, replace=False))
        shap = kernel_shap(model, train, test.take(rows), n_samples=cfg.shap_samples,
                           seed=cfg.seed, max_background=cfg.shap_background)
        return global_shap_importance(shap)
    raise ConfigError(f"unknown method {method!r}")


def run_pipeline(d: Dataset, cfg: RunConfig) -> RunResult:
    model, train, test, metrics = train_and_score(d, cfg)
    imp = explain_model(model, cfg.method, train, test, cfg)
    top = top_k(imp, cfg.k, {"model": cfg.model, "seed": cfg.seed})
    return RunResult(cfg, model, metrics, imp, top)


# ---------------------------------------------------------------------------
# cross-explanations


def mean_metrics(sets: Sequence[MetricSet]):
    arr = np.array([m.as_tuple() for m in sets])
    mean = dict(zip(METRIC_NAMES, arr.mean(axis=0).tolist()))
    var = dict(zip(METRIC_NAMES, arr.var(axis=0).tolist()))
    undefined = frozenset().union(*(m.undefined for m in sets))
    return MetricSet(**mean, undefined=undefined), var


@dataclass(frozen=True, eq=False)
class TransferReport:
    source: TopKSet
    receiver_scores: MetricSet
    variance: Mapping[str, float]
    repeats: int
    per_repeat: tuple[MetricSet, ...]
    threshold: float = TRANSFER_MCC

    @property
    def transferable(self) -> bool:
        return self.receiver_scores.mcc >= self.threshold

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "transfer_report",
            "source": self.source.to_dict(),
            "receiver": "dt (default parameters)",
            "repeats": self.repeats,
            "threshold": self.threshold,
            "transferable": self.transferable,
            "mean": self.receiver_scores.to_dict(),
            "variance": dict(self.variance),
            "per_repeat": [m.to_dict() for m in self.per_repeat],
        }


def receiver_scores(d: Dataset, features: Sequence[str], seed: int, repeats: int = 10,
                    test_fraction: float = 0.15):
    """Train a default tree on ``features`` only, once per repeat, each on a fresh split."""
    sub = d.select(features)
    out = []
    for r in range(repeats):
        rs = seeding.derive_seed(seed, 1000 + r)
        train, test = split(sub, test_fraction, rs)
        model = fit_model("dt", train, rs)
        out.append(evaluate(test.y, model.predict_labels(test.X)))
    return out


def cross_explain(d: Dataset, source: RunConfig | tuple[str, str] = ("ridge", "RIDGE_FC"),
                  k: int = 3, seed: int = 0, repeats: int = 10,
                  features: Sequence[str] | None = None) -> TransferReport:
    """Does the source's top-k feature set carry over to an independent tree?

    ``source`` is a ``(model kind, method)`` pair or a full :class:`RunConfig`.
    ``features`` bypasses the source and tests a given feature set directly.
    """
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    if features is not None:
        top = TopKSet(len(features), tuple(features), {"method": "forced"})
    else:
        cfg = source if isinstance(source, RunConfig) else RunConfig(
            model=source[0], method=source[1], seed=seed)
        cfg = cfg.replace(k=k)
        top = run_pipeline(d, cfg).top
        if not top.features:
            raise DataError(f"{cfg.model}/{cfg.method} scored every feature zero")
    per = receiver_scores(d, top.features, seed, repeats)
    mean, var = mean_metrics(per)
    return TransferReport(top, mean, var, repeats, tuple(per))


# ---------------------------------------------------------------------------
# consistency sweeps


@dataclass(frozen=True, eq=False)
class SweepRun:
    delta: Mapping[str, Any]
    config: RunConfig
    top: TopKSet
    metrics: MetricSet

    def to_dict(self) -> dict:
        return {"delta": dict(self.delta), "seed": self.config.seed, "top": self.top.to_dict(),
                "metrics": self.metrics.to_dict()}


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    base: RunConfig
    runs: tuple[SweepRun, ...]
    pairwise_jaccard: np.ndarray
    mean_jaccard: float
    performance_deltas: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "consistency_report",
            "base": self.base.to_dict(),
            "runs": [r.to_dict() for r in self.runs],
            "pairwise_jaccard": self.pairwise_jaccard.tolist(),
            "mean_jaccard": self.mean_jaccard,
            "performance_deltas": dict(self.performance_deltas),
        }


def assemble_report(base: RunConfig, runs: Sequence[SweepRun]) -> ConsistencyReport:
    n = len(runs)
    J = np.ones((n, n))
    for i, j in itertools.combinations(range(n), 2):
        J[i, j] = J[j, i] = jaccard(runs[i].top.features, runs[j].top.features)
    upper = J[np.triu_indices(n, 1)]
    arr = np.array([r.metrics.as_tuple() for r in runs])
    deltas = dict(zip(METRIC_NAMES, (arr.max(axis=0) - arr.min(axis=0)).tolist()))
    return ConsistencyReport(base, tuple(runs), J, float(upper.mean()) if upper.size else 1.0,
                             deltas)


def consistency_sweep(d: Dataset, base: RunConfig, variations: Sequence[Mapping[str, Any]],
                      k: int | None = None, seed_policy: str = "shared") -> ConsistencyReport:
    """Run ``base`` and each variation of it end to end and compare their top-k sets.

    Seeds: a variation that sets ``seed`` keeps it. Otherwise ``"shared"``
    reuses the base seed, so the variation is the only change, and
    ``"derived"`` gives run ``i`` the seed ``derive_seed(base.seed, i)``.
    """
    if seed_policy not in ("shared", "derived"):
        raise ConfigError("seed_policy must be 'shared' or 'derived'")
    if k is not None:
        base = base.replace(k=k)
    deltas = [{}] + [dict(v) for v in variations]
    if len(deltas) < 2:
        raise ConfigError("a sweep needs at least two runs")
    runs = []
    for i, delta in enumerate(deltas):
        seed = delta.get("seed", base.seed if seed_policy == "shared"
                         else seeding.derive_seed(base.seed, i))
        try:
            cfg = base.replace(**{**delta, "seed": seed})
            result = run_pipeline(d, cfg)
        except AuditError as exc:
            raise type(exc)(f"sweep run {i} ({delta or 'base'}) failed: {exc}") from exc
        runs.append(SweepRun(delta, cfg, result.top, result.metrics))
    return assemble_report(base, runs)


def performance_delta_summary(r: ConsistencyReport) -> dict:
    """How far performance moved across runs versus how far the explanations moved."""
    return {
        "standard_metrics_max_delta": max(r.performance_deltas[m] for m in STANDARD_METRICS),
        "mcc_max_delta": r.performance_deltas["mcc"],
        "explanation_mean_jaccard": r.mean_jaccard,
    }
