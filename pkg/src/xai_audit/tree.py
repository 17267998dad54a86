"""Greedy CART classifier for binary labels, with impurity importances and rule extraction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError

LEAF = -1
_TIE_EPS = 1e-12


def _impurity(counts: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of class-count rows ``counts[..., 2]``."""
    n = counts.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / n[..., None]
    p = np.nan_to_num(p)
    if criterion == "gini":
        return 1.0 - np.sum(p * p, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -np.sum(p * logs, axis=-1)


@dataclass(frozen=True)
class TreeParams:
    criterion: str = "gini"
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.criterion not in ("gini", "entropy"):
            raise ConfigError(f"criterion must be 'gini' or 'entropy', got {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be nonnegative")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split must be at least 2")

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Array-of-nodes tree. Node 0 is the root; ``feature[i] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    impurity: np.ndarray
    n_samples: np.ndarray
    class_counts: np.ndarray  # (n_nodes, 2): benign, attack
    n_features: int
    params: TreeParams = field(default_factory=TreeParams)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] == LEAF

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got shape {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class-1 frequency of the leaf each row lands in."""
        counts = self.class_counts[self.apply(X)]
        return counts[:, 1] / counts.sum(axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        counts = self.class_counts[self.apply(X)]
        # tie -> benign
        return (counts[:, 1] > counts[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "n_features": self.n_features,
            "nodes": {
                "feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(),
                "left": self.left.tolist(),
                "right": self.right.tolist(),
                "impurity": self.impurity.tolist(),
                "n_samples": self.n_samples.tolist(),
                "class_counts": self.class_counts.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        nodes = doc["nodes"]
        return cls(
            feature=np.array(nodes["feature"], dtype=np.intp),
            threshold=np.array(nodes["threshold"], dtype=np.float64),
            left=np.array(nodes["left"], dtype=np.intp),
            right=np.array(nodes["right"], dtype=np.intp),
            impurity=np.array(nodes["impurity"], dtype=np.float64),
            n_samples=np.array(nodes["n_samples"], dtype=np.int64),
            class_counts=np.array(nodes["class_counts"], dtype=np.int64).reshape(-1, 2),
            n_features=int(doc["n_features"]),
            params=TreeParams(**doc["params"]),
        )


def _best_split(X: np.ndarray, y: np.ndarray, criterion: str):
    """Return (gain, feature, threshold) of the best split, or None if every column is constant.

    ``gain`` is the parent impurity minus the size-weighted child impurity.
    Features are scanned in index order and thresholds in ascending order; a
    candidate replaces the incumbent only if it is better by more than a
    rounding margin, so exact ties go to the lowest feature, then threshold.
    """
    n = y.size
    total = np.array([n - y.sum(), y.sum()], dtype=np.float64)
    parent = float(_impurity(total, criterion))
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        boundary = np.flatnonzero(xs[1:] > xs[:-1])  # split after position b
        if boundary.size == 0:
            continue
        ones = np.cumsum(y[order], dtype=np.float64)[boundary]
        n_left = (boundary + 1).astype(np.float64)
        left = np.column_stack([n_left - ones, ones])
        right = total - left
        child = (n_left * _impurity(left, criterion)
                 + (n - n_left) * _impurity(right, criterion)) / n
        gains = parent - child
        top = gains.max()
        k = int(np.flatnonzero(gains >= top - _TIE_EPS)[0])
        if best is None or gains[k] > best[0] + _TIE_EPS:
            lo, hi = xs[boundary[k]], xs[boundary[k] + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:  # adjacent floats
                thr = lo
            best = (float(gains[k]), j, float(thr))
    return best


def train_dt(
    X: np.ndarray,
    y: np.ndarray,
    params: TreeParams | None = None,
) -> DecisionTree:
    """Grow a CART tree to purity, ``max_depth`` or ``min_samples_split``.

    A single-class training set yields a one-leaf tree. The procedure has no
    random component; ``params.seed`` is recorded for provenance only.
    """
    params = params or TreeParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("X must be 2-D with one row per label")
    if y.size == 0:
        raise DataError("cannot train a tree on zero rows")

    feature, threshold, left, right, impurity, n_samples, counts = ([] for _ in range(7))

    def new_node(rows: np.ndarray) -> int:
        c = np.array([rows.size - y[rows].sum(), y[rows].sum()])
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        impurity.append(float(_impurity(c.astype(float), params.criterion)))
        n_samples.append(rows.size)
        counts.append(c)
        return len(feature) - 1

    stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if impurity[node] <= 0.0:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if rows.size < params.min_samples_split:
            continue
        found = _best_split(X[rows], y[rows], params.criterion)
        if found is None:
            continue
        _, j, thr = found
        mask = X[rows, j] <= thr
        feature[node] = j
        threshold[node] = thr
        l_rows, r_rows = rows[mask], rows[~mask]
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))

    return DecisionTree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        impurity=np.array(impurity, dtype=np.float64),
        n_samples=np.array(n_samples, dtype=np.int64),
        class_counts=np.array(counts, dtype=np.int64).reshape(-1, 2),
        n_features=X.shape[1],
        params=params,
    )


def dt_feature_importances(t: DecisionTree) -> np.ndarray:
    """Normalized total impurity decrease per feature (zeros for a single leaf)."""
    imp = np.zeros(t.n_features)
    total = t.n_samples[0]
    for i in np.flatnonzero(t.feature != LEAF):
        l, r = t.left[i], t.right[i]
        n = t.n_samples[i]
        child = (t.n_samples[l] * t.impurity[l] + t.n_samples[r] * t.impurity[r]) / n
        imp[t.feature[i]] += n / total * (t.impurity[i] - child)
    s = imp.sum()
    return imp / s if s > 0 else imp


@dataclass(frozen=True)
class Literal:
    feature: int
    name: str
    op: str  # "<=" or ">"
    threshold: float

    def holds(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature]
        return col <= self.threshold if self.op == "<=" else col > self.threshold

    def __str__(self) -> str:
        return f"{self.name} {self.op} {self.threshold:.6g}"


@dataclass(frozen=True)
class Rule:
    """Conjunction of literals along one root-to-leaf path."""

    literals: tuple[Literal, ...]
    label: int
    support: int
    class_counts: tuple[int, int]

    def matches(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        ok = np.ones(X.shape[0], dtype=bool)
        for lit in self.literals:
            ok &= lit.holds(X)
        return ok

    def __str__(self) -> str:
        cond = " AND ".join(str(l) for l in self.literals) or "TRUE"
        return f"IF {cond} THEN label={self.label} (support={self.support})"

    def to_dict(self) -> dict:
        return {
            "literals": [
                {"feature": l.name, "index": l.feature, "op": l.op, "threshold": l.threshold}
                for l in self.literals
            ],
            "label": self.label,
            "support": self.support,
            "class_counts": list(self.class_counts),
        }


def dt_extract_rules(t: DecisionTree, feature_names: Sequence[str] | None = None) -> list[Rule]:
    """One rule per leaf, in left-to-right leaf order."""
    names = list(feature_names) if feature_names is not None else [
        f"x{j}" for j in range(t.n_features)
    ]
    rules = []

    def walk(i: int, path: tuple[Literal, ...]):
        if t.is_leaf(i):
            c = t.class_counts[i]
            rules.append(Rule(path, int(c[1] > c[0]), int(t.n_samples[i]), (int(c[0]), int(c[1]))))
            return
        j, thr = int(t.feature[i]), float(t.threshold[i])
        walk(int(t.left[i]), path + (Literal(j, names[j], "<=", thr),))
        walk(int(t.right[i]), path + (Literal(j, names[j], ">", thr),))

    walk(0, ())
    return rules
