"""Two-hidden-layer perceptron (d -> 10 -> 10 -> 1) trained with mini-batch BCE.

Hidden units are ReLU, the output unit is a sigmoid. Update rules follow the
Keras defaults the architecture is usually trained with:

RMSprop (rho=0.9, eps=1e-7)::

    v <- rho * v + (1 - rho) * g**2
    w <- w - lr * g / sqrt(v + eps)

Adam (beta1=0.9, beta2=0.999, eps=1e-7), bias correction folded into the step::

    m <- m + (1 - beta1) * (g - m)
    v <- v + (1 - beta2) * (g**2 - v)
    w <- w - lr * sqrt(1 - beta2**t) / (1 - beta1**t) * m / (sqrt(v) + eps)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .errors import ConfigError, DataError, TrainingError

HIDDEN = (10, 10)
PARAM_ORDER = ("W1", "b1", "W2", "b2", "W3", "b3")

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class MlpHyper:
    optimizer: str = "rmsprop"
    learning_rate: float = 0.001
    batch_size: int = 256
    epochs: int = 5

    def __post_init__(self):
        opt = self.optimizer.lower()
        if opt not in ("rmsprop", "adam"):
            raise ConfigError(f"optimizer must be 'rmsprop' or 'adam', got {self.optimizer!r}")
        object.__setattr__(self, "optimizer", opt)
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise ConfigError("batch_size >= 1, epochs >= 0 and learning_rate > 0 required")

    def to_dict(self) -> dict:
        return {
            "optimizer": self.optimizer,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
        }


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(n_in: int, rng: np.random.Generator) -> Params:
    """Glorot-uniform kernels, zero biases."""
    sizes = (n_in, *HIDDEN, 1)
    params = {}
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[f"W{k}"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params[f"b{k}"] = np.zeros(fan_out)
    return params


def forward(params: Params, X: np.ndarray):
    z1 = X @ params["W1"] + params["b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params["W2"] + params["b2"]
    h2 = np.maximum(z2, 0.0)
    z3 = (h2 @ params["W3"] + params["b3"])[:, 0]
    return z3, (z1, h1, z2, h2)


def bce_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^z) - y z, stable for large |z|
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_grad(params: Params, X: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy over the batch and its gradient for every parameter."""
    n = X.shape[0]
    z3, (z1, h1, z2, h2) = forward(params, X)
    loss = bce_from_logits(z3, y)
    dz3 = (sigmoid(z3) - y)[:, None] / n
    grads = {"W3": h2.T @ dz3, "b3": dz3.sum(axis=0)}
    dz2 = (dz3 @ params["W3"].T) * (z2 > 0)
    grads["W2"] = h1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ params["W2"].T) * (z1 > 0)
    grads["W1"] = X.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


class _RMSprop:
    def __init__(self, params: Params, lr: float, rho: float = 0.9, eps: float = 1e-7):
        self.lr, self.rho, self.eps = lr, rho, eps
        self.v = {k: np.zeros_like(p) for k, p in params.items()}

    def step(self, params: Params, grads: Params) -> None:
        for k in PARAM_ORDER:
            g = grads[k]
            self.v[k] = self.rho * self.v[k] + (1.0 - self.rho) * g * g
            params[k] -= self.lr * g / np.sqrt(self.v[k] + self.eps)


class _Adam:
    def __init__(self, params: Params, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-7):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        a = self.lr * np.sqrt(1.0 - self.beta2 ** self.t) / (1.0 - self.beta1 ** self.t)
        for k in PARAM_ORDER:
            g = grads[k]
            self.m[k] += (1.0 - self.beta1) * (g - self.m[k])
            self.v[k] += (1.0 - self.beta2) * (g * g - self.v[k])
            params[k] -= a * self.m[k] / (np.sqrt(self.v[k]) + self.eps)


@dataclass(eq=False)
class MlpModel:
    params: Params
    hyper: MlpHyper = field(default_factory=MlpHyper)
    seed: int = 0
    loss_history: List[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return int(self.params["W1"].shape[0])

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def logits(self, X: np.ndarray) -> np.ndarray:
        return forward(self.params, self._check(X))[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "hyper": self.hyper.to_dict(),
            "seed": self.seed,
            "activations": {"hidden": "relu", "output": "sigmoid"},
            "loss": "binary_crossentropy",
            "loss_history": list(self.loss_history),
            "params": {k: self.params[k].tolist() for k in PARAM_ORDER},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        params = {k: np.array(v, dtype=np.float64) for k, v in doc["params"].items()}
        return cls(params, MlpHyper(**doc["hyper"]), int(doc["seed"]),
                   list(doc.get("loss_history", [])))


def train_mlp(X: np.ndarray, y: np.ndarray, hyper: MlpHyper | None = None,
              seed: int = 0) -> MlpModel:
    """Mini-batch training; one generator seeded by ``seed`` drives init then per-epoch shuffles.

    ``loss_history`` holds the full-training-set loss before the first update
    and after every epoch.
    """
    hyper = hyper or MlpHyper()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size or y.size == 0:
        raise DataError("X must be 2-D with one row per label and at least one row")
    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], rng)
    opt = _Adam(params, hyper.learning_rate) if hyper.optimizer == "adam" else _RMSprop(
        params, hyper.learning_rate)

    def full_loss() -> float:
        loss = bce_from_logits(forward(params, X)[0], y)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite training loss ({loss}); training diverged")
        return loss

    history = [full_loss()]
    n = y.size
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = loss_and_grad(params, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite batch loss ({loss}); training diverged")
            opt.step(params, grads)
        history.append(full_loss())
    return MlpModel(params, hyper, seed, history)


def gradient_check(params: Params, X: np.ndarray, y: np.ndarray, h: float = 1e-6) -> dict:
    """Relative error between backprop and central differences, per parameter array.

    Error is ``||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12)``.
    """
    _, analytic = loss_and_grad(params, X, y)
    errors = {}
    for k in PARAM_ORDER:
        p = params[k]
        numeric = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + h
            up = loss_and_grad(params, X, y)[0]
            p[i] = old - h
            down = loss_and_grad(params, X, y)[0]
            p[i] = old
            numeric[i] = (up - down) / (2 * h)
        a = analytic[k]
        den = max(np.linalg.norm(a) + np.linalg.norm(numeric), 1e-12)
        errors[k] = float(np.linalg.norm(a - numeric) / den)
    return errors
