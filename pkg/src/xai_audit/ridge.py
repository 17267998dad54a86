"""Ridge classifier: penalized least squares on {-1, +1} targets, solved in closed form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class RidgeModel:
    coefficients: np.ndarray
    intercept: float
    alpha: float

    @property
    def n_features(self) -> int:
        return int(self.coefficients.size)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got shape {X.shape}")
        return X @ self.coefficients + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        # a score of exactly 0 is benign
        return (self.decision_function(X) > 0).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RidgeModel":
        return cls(np.array(doc["coefficients"], dtype=float), float(doc["intercept"]),
                   float(doc["alpha"]))


def ridge_system(X: np.ndarray, y: np.ndarray, alpha: float):
    """Centered normal-equation pieces ``(A, b)`` with ``A w = b``; intercept is unpenalized."""
    X = np.asarray(X, dtype=np.float64)
    t = np.where(np.asarray(y) == 1, 1.0, -1.0)
    Xc = X - X.mean(axis=0)
    tc = t - t.mean()
    A = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    b = Xc.T @ tc
    return A, b


def train_ridge(X: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> RidgeModel:
    """Fit on inputs that are expected to be standardized already."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] != y.size or X.shape[0] == 0:
        raise DataError("X must have one row per label and at least one row")
    if np.unique(y).size < 2:
        raise DataError("ridge classifier needs both classes in the training set")
    A, b = ridge_system(X, y, alpha)
    if alpha > 0:
        w = np.linalg.solve(A, b)
    else:
        w = np.linalg.lstsq(A, b, rcond=None)[0]
    t = np.where(y == 1, 1.0, -1.0)
    intercept = float(t.mean() - X.mean(axis=0) @ w)
    return RidgeModel(w, intercept, float(alpha))
