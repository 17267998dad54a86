"""Uniform handle over the three classifier families.

A :class:`TrainedModel` bundles the fitted estimator with the standardization
parameters it was fitted under, so callers always pass raw feature rows.
Ridge and MLP standardize by default; trees see raw values (they are
invariant to monotone rescaling anyway).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .data import Dataset, ScalerParams
from .errors import ConfigError, DataError
from .importance import ImportanceVector
from .mlp import MlpHyper, MlpModel, sigmoid, train_mlp
from .ridge import RidgeModel, train_ridge
from .tree import DecisionTree, TreeParams, dt_extract_rules, dt_feature_importances, train_dt

MODEL_KINDS = ("dt", "ridge", "mlp")
SCHEMA_VERSION = 1

Estimator = Union[DecisionTree, RidgeModel, MlpModel]


@dataclass(frozen=True)
class Prediction:
    labels: np.ndarray
    probabilities: Optional[np.ndarray]
    calibrated: bool


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    estimator: Estimator
    feature_names: tuple[str, ...]
    scaler: Optional[ScalerParams] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DataError(
                f"model was fitted on {self.n_features} features, got {X.shape[1]}"
            )
        return self.scaler.transform(X) if self.scaler is not None else X

    def predict(self, X) -> Prediction:
        Z = self._inputs(X)
        est = self.estimator
        if self.kind == "dt":
            return Prediction(est.predict(Z), est.predict_proba(Z), True)
        if self.kind == "ridge":
            score = est.decision_function(Z)
            # logistic squash of the margin; not a calibrated probability
            return Prediction((score > 0).astype(np.int8), sigmoid(score), False)
        proba = est.predict_proba(Z)
        return Prediction((proba > 0.5).astype(np.int8), proba, True)

    def predict_labels(self, X) -> np.ndarray:
        return self.predict(X).labels

    def output(self, X) -> np.ndarray:
        """Real-valued output that SHAP attributes.

        Class-1 leaf frequency for trees, the raw linear score for ridge and
        the sigmoid output for the MLP.
        """
        Z = self._inputs(X)
        if self.kind == "dt":
            return self.estimator.predict_proba(Z)
        if self.kind == "ridge":
            return self.estimator.decision_function(Z)
        return self.estimator.predict_proba(Z)

    __call__ = output

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "type": self.kind,
            "feature_names": list(self.feature_names),
            "standardization": None if self.scaler is None else self.scaler.to_dict(),
            "model": self.estimator.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedModel":
        kind = doc["type"]
        loader = {"dt": DecisionTree, "ridge": RidgeModel, "mlp": MlpModel}.get(kind)
        if loader is None:
            raise DataError(f"unknown model type {kind!r}")
        scaler = doc.get("standardization")
        return cls(kind, loader.from_dict(doc["model"]), tuple(doc["feature_names"]),
                   None if scaler is None else ScalerParams.from_dict(scaler))


def _check_train(train: Dataset) -> None:
    if train.n_rows < 2:
        raise DataError("need at least 2 training rows")


def fit_dt(train: Dataset, params: TreeParams | None = None, seed: int = 0) -> TrainedModel:
    _check_train(train)
    params = params or TreeParams(seed=seed)
    if params.seed != seed:
        params = TreeParams(params.criterion, params.max_depth, params.min_samples_split, seed)
    return TrainedModel("dt", train_dt(train.X, train.y, params), train.feature_names)


def fit_ridge(train: Dataset, alpha: float = 1.0, seed: int = 0,
              standardize: bool = True) -> TrainedModel:
    """``seed`` is accepted for interface symmetry; the closed form is deterministic."""
    _check_train(train)
    scaler = ScalerParams.fit(train.X) if standardize else None
    Z = scaler.transform(train.X) if scaler is not None else train.X
    return TrainedModel("ridge", train_ridge(Z, train.y, alpha), train.feature_names, scaler)


def fit_mlp(train: Dataset, hyper: MlpHyper | None = None, seed: int = 0,
            standardize: bool = True) -> TrainedModel:
    _check_train(train)
    scaler = ScalerParams.fit(train.X) if standardize else None
    Z = scaler.transform(train.X) if scaler is not None else train.X
    return TrainedModel("mlp", train_mlp(Z, train.y, hyper, seed), train.feature_names, scaler)


def fit_model(kind: str, train: Dataset, seed: int = 0, *, tree_params: TreeParams | None = None,
              alpha: float = 1.0, hyper: MlpHyper | None = None) -> TrainedModel:
    if kind == "dt":
        return fit_dt(train, tree_params, seed)
    if kind == "ridge":
        return fit_ridge(train, alpha, seed)
    if kind == "mlp":
        return fit_mlp(train, hyper, seed)
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def predict(m: TrainedModel, X) -> Prediction:
    return m.predict(X)


def dt_importances(m: TrainedModel) -> ImportanceVector:
    if m.kind != "dt":
        raise ConfigError("DT_FI is only defined for decision trees")
    return ImportanceVector("DT_FI", dt_feature_importances(m.estimator), m.feature_names,
                            {"criterion": m.estimator.params.criterion,
                             "seed": m.estimator.params.seed})


def ridge_coefficients(m: TrainedModel) -> ImportanceVector:
    """Signed coefficients; comparable across features only because inputs were standardized."""
    if m.kind != "ridge":
        raise ConfigError("RIDGE_FC is only defined for ridge models")
    return ImportanceVector("RIDGE_FC", m.estimator.coefficients, m.feature_names,
                            {"alpha": m.estimator.alpha, "standardized": m.scaler is not None})


def rules(m: TrainedModel):
    if m.kind != "dt":
        raise ConfigError("rules can only be extracted from decision trees")
    return dt_extract_rules(m.estimator, m.feature_names)
