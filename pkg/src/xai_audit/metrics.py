"""Binary confusion matrices and the six scores used throughout the audit.

Orientation follows the usual layout: rows are the actual class, columns the
predicted class, positive (attack, label 1) first::

                 pred 1   pred 0
    actual 1       TP       FN
    actual 0       FP       TN

MCC is extended to the zero-denominator matrices: +1 when only TP or only TN
is nonzero, -1 when only FP or only FN is nonzero, 0 otherwise. Precision,
recall, F1 and the two balanced-accuracy terms return 0 on a zero denominator
and are listed in :attr:`MetricSet.undefined`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DataError

METRIC_NAMES = ("accuracy", "balanced_accuracy", "f1", "precision", "recall", "mcc")
STANDARD_METRICS = ("accuracy", "f1", "precision", "recall")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fn", "fp", "tn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """The same predictions scored with the class roles exchanged."""
        return ConfusionMatrix(tp=self.tn, fn=self.fp, fp=self.fn, tn=self.tp)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    balanced_accuracy: float
    f1: float
    precision: float
    recall: float
    mcc: float
    undefined: frozenset = field(default=frozenset())

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in METRIC_NAMES)

    def to_dict(self) -> dict:
        """Flat mapping with the six fixed keys (degeneracy flags are not serialized here)."""
        return {k: float(getattr(self, k)) for k in METRIC_NAMES}

    def __getitem__(self, key: str) -> float:
        if key not in METRIC_NAMES:
            raise KeyError(key)
        return getattr(self, key)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true).ravel()
    p = np.asarray(y_pred).ravel()
    if t.shape != p.shape:
        raise DataError(f"length mismatch: {t.size} labels vs {p.size} predictions")
    if t.size == 0:
        raise DataError("cannot build a confusion matrix from empty input")
    for arr, what in ((t, "y_true"), (p, "y_pred")):
        if not np.all((arr == 0) | (arr == 1)):
            raise DataError(f"{what} contains values other than 0 and 1")
    t = t.astype(bool)
    p = p.astype(bool)
    tp = int(np.count_nonzero(t & p))
    fn = int(np.count_nonzero(t & ~p))
    fp = int(np.count_nonzero(~t & p))
    tn = t.size - tp - fn - fp
    return ConfusionMatrix(tp, fn, fp, tn)


def _ratio(num: int, den: int, name: str, undefined: set) -> float:
    if den == 0:
        undefined.add(name)
        return 0.0
    return num / den


def matthews(cm: ConfusionMatrix) -> float:
    tp, fn, fp, tn = cm.tp, cm.fn, cm.fp, cm.tn
    # python ints: no overflow for any count size
    den = (tp + fp) * (tp + fn) * (fp + tn) * (tn + fn)
    if den:
        num = tp * tn - fp * fn
        return max(-1.0, min(1.0, num / math.sqrt(den)))
    nonzero = [name for name, v in (("tp", tp), ("fn", fn), ("fp", fp), ("tn", tn)) if v]
    if nonzero in (["tp"], ["tn"]):
        return 1.0
    if nonzero in (["fn"], ["fp"]):
        return -1.0
    return 0.0


def score(cm: ConfusionMatrix) -> MetricSet:
    if cm.total == 0:
        raise DataError("cannot score an all-zero confusion matrix")
    tp, fn, fp, tn = cm.tp, cm.fn, cm.fp, cm.tn
    undefined: set[str] = set()
    precision = _ratio(tp, tp + fp, "precision", undefined)
    recall = _ratio(tp, tp + fn, "recall", undefined)
    f1 = _ratio(2 * tp, 2 * tp + fp + fn, "f1", undefined)
    terms: set[str] = set()
    sensitivity = _ratio(tp, tp + fn, "sensitivity", terms)
    specificity = _ratio(tn, tn + fp, "specificity", terms)
    if terms:
        undefined.add("balanced_accuracy")
    return MetricSet(
        accuracy=(tp + tn) / cm.total,
        balanced_accuracy=0.5 * (sensitivity + specificity),
        f1=f1,
        precision=precision,
        recall=recall,
        mcc=matthews(cm),
        undefined=frozenset(undefined),
    )


def evaluate(y_true, y_pred) -> MetricSet:
    return score(confusion(y_true, y_pred))


def false_positive_rate_benign(cm: ConfusionMatrix) -> float:
    """FN / (TP + FN): the share of actual attacks the classifier let through.

    Despite the name this is the miss rate over actual positives, e.g.
    131 / (504 + 131) = 0.206. The name is kept so results stay comparable
    with tables that label this quantity a false positive rate.
    """
    den = cm.tp + cm.fn
    if den == 0:
        raise DataError("no actual positives: rate undefined")
    return cm.fn / den


@dataclass(frozen=True)
class Counterexample:
    matrix: ConfusionMatrix
    metrics: MetricSet
    failing: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.to_dict(),
            "metrics": self.metrics.to_dict(),
            "failing": list(self.failing),
        }


def mcc_guarantee_probe(
    mcc_threshold: float = 0.95,
    max_small: int = 20,
    tn_ladder: Iterable[int] = (10**4, 10**6),
) -> list[Counterexample]:
    """Search for matrices that pass an MCC gate while another score fails it.

    Enumerates every ``tp, fn, fp`` in ``0..max_small`` against each ``tn`` in
    ``tn_ladder``. A matrix is a counterexample when MCC >= threshold and at
    least one *defined* score among accuracy, balanced accuracy, F1, precision
    and recall is below it; undefined scores are skipped, not treated as 0.
    """
    if not 0.0 < mcc_threshold < 1.0:
        raise ValueError("mcc_threshold must lie in (0, 1)")
    others = ("accuracy", "balanced_accuracy", "f1", "precision", "recall")
    found = []
    for tn in sorted(set(int(t) for t in tn_ladder)):
        for tp in range(max_small + 1):
            for fn in range(max_small + 1):
                for fp in range(max_small + 1):
                    cm = ConfusionMatrix(tp, fn, fp, tn)
                    if cm.total == 0:
                        continue
                    ms = score(cm)
                    if ms.mcc < mcc_threshold:
                        continue
                    failing = tuple(
                        k for k in others if k not in ms.undefined and ms[k] < mcc_threshold
                    )
                    if failing:
                        found.append(Counterexample(cm, ms, failing))
    return found
