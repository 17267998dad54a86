"""Model-agnostic explanations: permutation importance and Shapley attributions.

Both explainers treat the model as a black box. Any callable mapping an
``(n, M)`` array to ``n`` outputs works with the Shapley functions; a
:class:`~xai_audit.models.TrainedModel` is such a callable.

Absent features are filled from background rows (interventional
replacement), so the value of a coalition ``S`` is::

    v(S) = mean_b f(x_S, b_{not S})
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError
from .importance import ImportanceVector
from .metrics import METRIC_NAMES, evaluate
from .mlp import sigmoid
from .seeding import SHAP_BACKGROUND, SHAP_COALITIONS, derive_seed

MAX_ENUMERATED = 12
MAX_EXACT = 15
_CHUNK_ROWS = 1 << 20


def _matrix(data) -> np.ndarray:
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    return X[None, :] if X.ndim == 1 else X


def _names(data, model, m: int) -> tuple[str, ...]:
    for src in (data, model):
        names = getattr(src, "feature_names", None)
        if names is not None and len(names) == m:
            return tuple(names)
    return tuple(f"x{i}" for i in range(m))


# ---------------------------------------------------------------------------
# permutation importance


def permutation_importance(model, test: Dataset, metric: str = "mcc", repeats: int = 10,
                           seed: int = 0) -> ImportanceVector:
    """Drop in ``metric`` when one column of ``test`` is shuffled, averaged over ``repeats``.

    Each feature gets its own shuffle stream derived from ``(seed, feature)``.
    Scores may be negative when shuffling happens to help.
    """
    if metric not in METRIC_NAMES:
        raise ConfigError(f"unknown metric {metric!r}; expected one of {METRIC_NAMES}")
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    if test.n_rows == 0:
        raise DataError("permutation importance needs a non-empty evaluation set")
    if np.unique(test.y).size < 2:
        raise DataError("evaluation set holds a single class; baseline metric is undefined")
    predict = getattr(model, "predict_labels", None) or model.predict

    base = evaluate(test.y, predict(test.X))
    if metric in base.undefined:
        raise DataError(f"baseline {metric} is undefined on this evaluation set")
    baseline = base[metric]

    X = np.array(test.X)
    scores = np.zeros(test.n_features)
    spread = np.zeros(test.n_features)
    for j in range(test.n_features):
        rng = np.random.default_rng(derive_seed(seed, j))
        original = X[:, j].copy()
        drops = np.empty(repeats)
        for r in range(repeats):
            X[:, j] = rng.permutation(original)
            drops[r] = baseline - evaluate(test.y, predict(X))[metric]
        X[:, j] = original
        scores[j] = drops.mean()
        spread[j] = drops.std()
    return ImportanceVector("PI", scores, test.feature_names, {
        "metric": metric, "repeats": repeats, "seed": seed, "baseline": baseline,
        "std": [float(s) for s in spread],
    })


# ---------------------------------------------------------------------------
# Shapley values


@dataclass(frozen=True, eq=False)
class ShapMatrix:
    values: np.ndarray  # (n_instances, n_features)
    base_value: float
    outputs: np.ndarray  # model output at each explained instance
    feature_names: tuple[str, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def local_accuracy_gap(self) -> np.ndarray:
        return self.base_value + self.values.sum(axis=1) - self.outputs

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "base_value": float(self.base_value),
            "values": self.values.tolist(),
            "outputs": self.outputs.tolist(),
            "metadata": dict(self.metadata),
        }


def _evaluate_coalitions(f: Callable, x: np.ndarray, B: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """``v(z)`` for every row of the boolean coalition matrix ``Z``."""
    nb, m = B.shape
    per_chunk = max(1, _CHUNK_ROWS // max(nb, 1))
    out = np.empty(Z.shape[0])
    for start in range(0, Z.shape[0], per_chunk):
        z = Z[start:start + per_chunk]
        rows = np.where(z[:, None, :], x[None, None, :], B[None, :, :]).reshape(-1, m)
        out[start:start + per_chunk] = np.asarray(f(rows), dtype=np.float64).reshape(
            z.shape[0], nb).mean(axis=1)
    return out


def _shapley_kernel(m: int, sizes: np.ndarray) -> np.ndarray:
    sizes = np.asarray(sizes)
    return (m - 1) / (np.array([math.comb(m, int(s)) for s in sizes]) * sizes * (m - sizes))


def _all_coalitions(m: int) -> np.ndarray:
    codes = np.arange(1, 2 ** m - 1)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(bool)


def _sampled_coalitions(m: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Antithetic pairs (S, complement of S), sizes drawn in proportion to the kernel mass."""
    sizes = np.arange(1, m)
    mass = (m - 1) / (sizes * (m - sizes))
    n_pairs = (n_samples + 1) // 2
    drawn = rng.choice(sizes, size=n_pairs, p=mass / mass.sum())
    Z = np.zeros((2 * n_pairs, m), dtype=bool)
    for k, s in enumerate(drawn):
        members = rng.choice(m, size=s, replace=False)
        Z[2 * k, members] = True
        Z[2 * k + 1] = ~Z[2 * k]
    return Z


def _constrained_wls(Z: np.ndarray, w: np.ndarray, v: np.ndarray, v0: float, fx: float):
    """Weighted least squares for phi with sum(phi) == fx - v0 imposed by substitution."""
    m = Z.shape[1]
    total = fx - v0
    if m == 1:
        return np.array([total])
    zf = Z.astype(np.float64)
    A = zf[:, :-1] - zf[:, -1:]
    b = v - v0 - zf[:, -1] * total
    sw = np.sqrt(w)
    head = np.linalg.lstsq(A * sw[:, None], b * sw, rcond=None)[0]
    return np.append(head, total - head.sum())


def _background(background, cap: int, seed: int) -> np.ndarray:
    B = _matrix(background)
    if B.shape[0] == 0:
        raise DataError("background set is empty")
    if B.shape[0] > cap:
        rng = np.random.default_rng(derive_seed(seed, SHAP_BACKGROUND))
        B = B[np.sort(rng.choice(B.shape[0], size=cap, replace=False))]
    return B


def kernel_shap(model: Callable, background, instances, n_samples: int = 2048, seed: int = 0,
                max_background: int = 100) -> ShapMatrix:
    """Kernel SHAP attributions for each row of ``instances``.

    With at most 12 features every coalition is enumerated and the result is
    the exact Shapley value of the interventional game. Beyond that
    ``n_samples`` coalitions are drawn in antithetic pairs. The efficiency
    constraint (attributions sum to output minus base value) holds exactly in
    both regimes. Backgrounds larger than ``max_background`` are subsampled.
    """
    f = model
    B = _background(background, max_background, seed)
    X = _matrix(instances)
    m = B.shape[1]
    if X.shape[1] != m:
        raise DataError(f"instances have {X.shape[1]} features, background has {m}")
    names = _names(instances, model, m)

    exact = m <= MAX_ENUMERATED
    if m == 1:
        Z = np.zeros((0, 1), dtype=bool)
        w = np.zeros(0)
    elif exact:
        Z = _all_coalitions(m)
        w = _shapley_kernel(m, Z.sum(axis=1))
    else:
        if n_samples < m + 2:
            raise ConfigError(f"n_samples={n_samples} below the minimum {m + 2} for {m} features")
        Z = _sampled_coalitions(m, n_samples, np.random.default_rng(derive_seed(seed, SHAP_COALITIONS)))
        w = np.ones(Z.shape[0])

    base = float(np.mean(np.asarray(f(B), dtype=np.float64)))
    outputs = np.asarray(f(X), dtype=np.float64).reshape(-1)
    values = np.empty_like(X)
    for i, x in enumerate(X):
        v = _evaluate_coalitions(f, x, B, Z) if Z.shape[0] else np.zeros(0)
        values[i] = _constrained_wls(Z, w, v, base, outputs[i])
    return ShapMatrix(values, base, outputs, names, {
        "seed": seed, "n_background": int(B.shape[0]), "enumerated": exact,
        "n_coalitions": int(Z.shape[0]), "n_samples": None if exact else n_samples,
        "replacement": "interventional",
    })


def exact_shapley(model: Callable, background, instance) -> np.ndarray:
    """Brute-force Shapley values: factorial-weighted marginal contributions over all subsets.

    Every background row is used (no subsampling), and each coalition value is
    computed independently of the Kernel SHAP machinery.
    """
    B = _matrix(background)
    x = _matrix(instance)[0]
    m = B.shape[1]
    if m > MAX_EXACT:
        raise ConfigError(f"exact Shapley enumeration is limited to {MAX_EXACT} features, got {m}")
    if B.shape[0] == 0:
        raise DataError("background set is empty")

    value = {}
    for size in range(m + 1):
        for subset in itertools.combinations(range(m), size):
            rows = B.copy()
            cols = list(subset)
            rows[:, cols] = x[cols]
            value[frozenset(subset)] = float(np.mean(model(rows)))

    phi = np.zeros(m)
    fact = math.factorial
    for i in range(m):
        others = [j for j in range(m) if j != i]
        for size in range(m):
            weight = fact(size) * fact(m - size - 1) / fact(m)
            for subset in itertools.combinations(others, size):
                s = frozenset(subset)
                phi[i] += weight * (value[s | {i}] - value[s])
    return phi


def global_shap_importance(s: ShapMatrix) -> ImportanceVector:
    """Mean absolute attribution per feature."""
    if s.values.shape[0] == 0:
        raise DataError("no explained instances")
    scores = np.abs(s.values).mean(axis=0)
    return ImportanceVector("SHAP_GLOBAL", scores, s.feature_names,
                            {**s.metadata, "n_instances": int(s.values.shape[0])})


# ---------------------------------------------------------------------------
# coefficient vs gradient alignment on two hand-built models


@dataclass(frozen=True)
class ToyModel:
    """Attack-probability models over traffic density T in [0, 10] and recent history H in [0, 1].

    ``step``:   c1 * [T > threshold] + c2 * H
    ``smooth``: sigmoid(c1 * (T - threshold) + c2 * H)
    """

    c1: float
    c2: float
    threshold: float
    variant: str

    def __post_init__(self):
        if self.variant not in ("step", "smooth"):
            raise ValueError(f"variant must be 'step' or 'smooth', got {self.variant!r}")

    def __call__(self, T, H):
        T, H = np.asarray(T, dtype=float), np.asarray(H, dtype=float)
        if self.variant == "step":
            return self.c1 * (T > self.threshold) + self.c2 * H
        return sigmoid(self.c1 * (T - self.threshold) + self.c2 * H)

    def gradient(self, T, H):
        """(dM/dT, dM/dH). The step's T-derivative is 0, including at the threshold itself."""
        T, H = np.broadcast_arrays(np.asarray(T, dtype=float), np.asarray(H, dtype=float))
        if self.variant == "step":
            return np.zeros_like(T), np.full_like(H, self.c2)
        s = self(T, H)
        ds = s * (1.0 - s)
        return ds * self.c1, ds * self.c2


TOY_FEATURES = ("T", "H")


@dataclass(frozen=True, eq=False)
class VariantAlignment:
    variant: str
    coefficient: ImportanceVector
    gradient: ImportanceVector
    grad_T: np.ndarray
    grad_H: np.ndarray

    @property
    def coefficient_top(self) -> str:
        return TOY_FEATURES[self.coefficient.ranking()[0]]

    @property
    def gradient_top(self) -> str:
        return TOY_FEATURES[self.gradient.ranking()[0]]

    @property
    def agree(self) -> bool:
        return self.coefficient_top == self.gradient_top

    def to_dict(self) -> dict:
        return {
            "coefficient_top": self.coefficient_top,
            "gradient_top": self.gradient_top,
            "agree": self.agree,
            "coefficient_scores": self.coefficient.as_dict(),
            "mean_abs_gradient": self.gradient.as_dict(),
        }


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    c1: float
    c2: float
    threshold: float
    grid_T: np.ndarray
    grid_H: np.ndarray
    variants: Mapping[str, VariantAlignment]

    def to_dict(self) -> dict:
        return {
            "kind": "toy_alignment",
            "c1": self.c1,
            "c2": self.c2,
            "threshold": self.threshold,
            "grid": {"T": [0.0, 10.0, int(self.grid_T.size)], "H": [0.0, 1.0, int(self.grid_H.size)]},
            "variants": {k: v.to_dict() for k, v in self.variants.items()},
        }


def toy_alignment_demo(c1: float = 0.9, c2: float = 0.1, threshold: float = 7.0,
                       resolution: int = 201) -> AlignmentReport:
    """Rank T and H by coefficient magnitude and by mean |gradient| over the input grid."""
    if c1 < 0 or c2 < 0:
        raise ValueError("c1 and c2 must be nonnegative")
    T = np.linspace(0.0, 10.0, resolution)
    H = np.linspace(0.0, 1.0, resolution)
    TT, HH = np.meshgrid(T, H, indexing="ij")
    variants = {}
    for variant in ("step", "smooth"):
        toy = ToyModel(c1, c2, threshold, variant)
        gT, gH = toy.gradient(TT, HH)
        coef = ImportanceVector("COEFFICIENT", [abs(c1), abs(c2)], TOY_FEATURES,
                                {"variant": variant})
        grad = ImportanceVector("GRADIENT", [np.abs(gT).mean(), np.abs(gH).mean()], TOY_FEATURES,
                                {"variant": variant, "resolution": resolution})
        variants[variant] = VariantAlignment(variant, coef, grad, gT, gH)
    return AlignmentReport(c1, c2, threshold, T, H, variants)


def linear_shap_reference(coefficients: Sequence[float], background, instances) -> np.ndarray:
    """Closed-form attributions of a linear score: ``coef_i * (x_i - mean background_i)``."""
    B = _matrix(background)
    X = _matrix(instances)
    return (X - B.mean(axis=0)) * np.asarray(coefficients, dtype=float)
