"""Unified per-feature importance representation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

METHODS = ("DT_FI", "RIDGE_FC", "PI", "SHAP_GLOBAL", "GRADIENT", "COEFFICIENT")
SIGNED_METHODS = frozenset({"RIDGE_FC", "PI", "COEFFICIENT"})


@dataclass(frozen=True, eq=False)
class ImportanceVector:
    method: str
    scores: np.ndarray
    feature_names: tuple[str, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown importance method {self.method!r}")
        scores = np.array(self.scores, dtype=np.float64).ravel()
        names = tuple(self.feature_names)
        if scores.size != len(names):
            raise ValueError(f"{scores.size} scores for {len(names)} features")
        if self.method not in SIGNED_METHODS and np.any(scores < 0):
            raise ValueError(f"{self.method} scores must be nonnegative")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def degenerate(self) -> bool:
        """True when no feature carries any signal."""
        return not np.any(self.scores)

    def ranking(self) -> list[int]:
        """Feature indices by descending |score|, ties by index."""
        return sorted(range(self.scores.size), key=lambda i: (-abs(self.scores[i]), i))

    def as_dict(self) -> dict[str, float]:
        return {n: float(s) for n, s in zip(self.feature_names, self.scores)}

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "feature_names": list(self.feature_names),
            "scores": [float(s) for s in self.scores],
            "degenerate": self.degenerate,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ImportanceVector":
        return cls(doc["method"], np.array(doc["scores"], dtype=float),
                   tuple(doc["feature_names"]), doc.get("metadata", {}))
