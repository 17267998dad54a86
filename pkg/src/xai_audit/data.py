"""Dataset ingestion, profiling, splitting, standardization and correlation pruning.

All operations are pure functions of their inputs (and a seed where randomness
is involved). :class:`Dataset` arrays are made read-only on construction so a
dataset can be shared freely between pipeline stages.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "Dataset",
    "ImbalanceProfile",
    "CorrelationMatrix",
    "SyntheticSpec",
    "ScalerParams",
    "PruneResult",
    "load_csv",
    "write_csv",
    "imbalance_degree",
    "profile_imbalance",
    "pearson_matrix",
    "prune_correlated",
    "split_indices",
    "split",
    "standardize",
    "generate_synthetic",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with named columns and binary labels (1 = attack, 0 = benign)."""

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {X.shape}")
        if y.ndim != 1:
            raise DataError(f"y must be 1-D, got shape {y.shape}")
        if X.shape[1] != len(names):
            raise DataError(f"{X.shape[1]} columns but {len(names)} feature names")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate feature names: {dupes}")
        if not np.all(np.isfinite(X)):
            raise DataError("feature matrix contains NaN or infinite values")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y.astype(np.int8)))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.feature_names, self.X[rows], self.y[rows])

    def select(self, names: Iterable[str]) -> "Dataset":
        """Column subset in the order given."""
        names = list(names)
        index = {n: i for i, n in enumerate(self.feature_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise DataError(f"unknown features: {missing}")
        cols = [index[n] for n in names]
        return Dataset(tuple(names), self.X[:, cols], self.y)

    def drop(self, names: Iterable[str]) -> "Dataset":
        gone = set(names)
        return self.select(n for n in self.feature_names if n not in gone)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


# ---------------------------------------------------------------------------
# CSV


def load_csv(
    path,
    label_column: str = "Label",
    positive_labels: Iterable[str] = ("1",),
    drop_columns: Iterable[str] = (),
) -> Dataset:
    """Read a comma-separated export into a :class:`Dataset`.

    The label column and every column in ``drop_columns`` are removed from the
    features. A row is labelled 1 when its label cell (whitespace-stripped) is
    in ``positive_labels``, else 0. Drop columns absent from the header are
    ignored so one drop list can serve several exports.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    positives = {str(p).strip() for p in positive_labels}
    drops = set(drop_columns) | {label_column}

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        seen: set[str] = set()
        dupes = [h for h in header if h in seen or seen.add(h)]
        if dupes:
            raise DataError(f"{path}: duplicate header names {sorted(set(dupes))}")
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")

        label_at = header.index(label_column)
        keep = [i for i, h in enumerate(header) if h not in drops]
        names = tuple(header[i] for i in keep)

        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(record)}"
                )
            values = []
            for i in keep:
                cell = record[i]
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {header[i]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}:{lineno}: non-finite value {cell!r} in column {header[i]!r}"
                    )
                values.append(v)
            rows.append(values)
            labels.append(1 if record[label_at].strip() in positives else 0)

    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(names, X, np.array(labels, dtype=np.int8))


def write_csv(d: Dataset, path, label_column: str = "Label") -> Path:
    """Write ``d`` with 17 significant digits so :func:`load_csv` reads it back bit-exactly.

    Labels are written as ``0``/``1``; read back with ``positive_labels={"1"}``.
    """
    path = Path(path)
    if label_column in d.feature_names:
        raise DataError(f"label column {label_column!r} collides with a feature name")
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*d.feature_names, label_column])
        for row, label in zip(d.X, d.y):
            w.writerow([format(v, ".17g") for v in row] + [str(int(label))])
    return path


# ---------------------------------------------------------------------------
# imbalance

DEGREES = ("Balanced", "Mild", "Moderate", "Severe", "Extreme")


@dataclass(frozen=True)
class ImbalanceProfile:
    total: int
    positives: int
    majority_fraction: float
    degree: str

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "positives": self.positives,
            "majority_fraction": self.majority_fraction,
            "degree": self.degree,
        }


def imbalance_degree(majority_fraction: float) -> str:
    """Bucket a majority-class fraction into a degree of imbalance.

    Mild is [0.60, 0.75), Moderate [0.75, 0.85), Severe [0.85, 0.99) and
    Extreme >= 0.99. Anything below 0.60 is reported as Balanced.
    """
    m = float(majority_fraction)
    if not 0.5 <= m <= 1.0:
        raise ValueError(f"majority fraction must lie in [0.5, 1], got {m}")
    if m >= 0.99:
        return "Extreme"
    if m >= 0.85:
        return "Severe"
    if m >= 0.75:
        return "Moderate"
    if m >= 0.60:
        return "Mild"
    return "Balanced"


def profile_counts(total: int, positives: int) -> ImbalanceProfile:
    if total <= 0:
        raise DataError("cannot profile an empty dataset")
    if not 0 <= positives <= total:
        raise DataError(f"positives={positives} outside [0, {total}]")
    p = positives / total
    m = max(p, 1.0 - p)
    return ImbalanceProfile(int(total), int(positives), m, imbalance_degree(m))


def profile_imbalance(d: Dataset) -> ImbalanceProfile:
    return profile_counts(d.n_rows, int(d.y.sum()))


# ---------------------------------------------------------------------------
# correlation


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Pearson coefficients; entries touching a constant column are NaN and flagged."""

    names: tuple[str, ...]
    r: np.ndarray
    undefined: np.ndarray

    @property
    def constant_columns(self) -> tuple[str, ...]:
        return tuple(n for n, u in zip(self.names, np.diag(self.undefined)) if u)

    def strong_pairs(self, threshold: float = 0.95) -> list[tuple[str, str, float]]:
        out = []
        n = len(self.names)
        for i in range(n):
            for j in range(i + 1, n):
                if not self.undefined[i, j] and abs(self.r[i, j]) >= threshold:
                    out.append((self.names[i], self.names[j], float(self.r[i, j])))
        return out

    def to_dict(self) -> dict:
        r = [[None if u else float(v) for v, u in zip(row, urow)]
             for row, urow in zip(self.r, self.undefined)]
        return {"names": list(self.names), "r": r}


def pearson_matrix(d: Dataset) -> CorrelationMatrix:
    if d.n_rows < 2:
        raise DataError("Pearson correlation needs at least 2 rows")
    X = d.X
    constant = np.ptp(X, axis=0) == 0
    Xc = X - X.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    cov = Xc.T @ Xc
    with np.errstate(divide="ignore", invalid="ignore"):
        r = cov / np.outer(norms, norms)
    r = np.clip(r, -1.0, 1.0)
    undefined = constant[:, None] | constant[None, :]
    r[undefined] = np.nan
    live = ~constant
    r[np.diag_indices_from(r)] = np.where(live, 1.0, np.nan)
    # exact symmetry regardless of summation order
    r = np.where(undefined, np.nan, (r + r.T) / 2)
    return CorrelationMatrix(d.feature_names, _frozen(r), _frozen(undefined))


class PruneResult(NamedTuple):
    dataset: Dataset
    removed: frozenset
    constant: frozenset


def prune_correlated(d: Dataset, threshold: float = 0.95, keep_one: bool = False) -> PruneResult:
    """Drop every feature with |r| >= threshold against at least one other feature.

    By default both members of a strong pair go. With ``keep_one`` the
    features are scanned in column order and one is dropped only when it is
    strongly correlated with a feature already kept. Constant columns are
    dropped too but reported in ``constant``, not ``removed``.
    """
    cm = pearson_matrix(d)
    constant = set(cm.constant_columns)
    absr = np.where(cm.undefined, 0.0, np.abs(cm.r))
    np.fill_diagonal(absr, 0.0)
    strong = absr >= threshold

    removed: set[str] = set()
    if keep_one:
        kept: list[int] = []
        for j, name in enumerate(d.feature_names):
            if name in constant:
                continue
            if any(strong[j, k] for k in kept):
                removed.add(name)
            else:
                kept.append(j)
    else:
        removed = {n for n, s in zip(d.feature_names, strong.any(axis=1)) if s}

    gone = removed | constant
    if len(gone) == d.n_features:
        raise DataError("correlation pruning would remove every feature")
    return PruneResult(d.drop(gone), frozenset(removed), frozenset(constant))


# ---------------------------------------------------------------------------
# split / standardize


def split_indices(y: np.ndarray, test_fraction: float = 0.15, seed: int = 0):
    """Stratified train/test row indices, both sorted ascending."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        n_test = int(math.floor(idx.size * test_fraction + 0.5))
        if idx.size == 0 or n_test == 0 or n_test == idx.size:
            raise DataError(
                f"class {cls} has {idx.size} rows, too few to appear in both partitions "
                f"at test_fraction={test_fraction}"
            )
        perm = rng.permutation(idx)
        test.append(perm[:n_test])
        train.append(perm[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split(d: Dataset, test_fraction: float = 0.15, seed: int = 0) -> tuple[Dataset, Dataset]:
    tr, te = split_indices(d.y, test_fraction, seed)
    return d.take(tr), d.take(te)


@dataclass(frozen=True, eq=False)
class ScalerParams:
    """Column means and population standard deviations of a training partition."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "ScalerParams":
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise DataError("cannot standardize an empty training set")
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[np.ptp(X, axis=0) == 0] = 0.0
        return cls(_frozen(mean), _frozen(scale))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        live = self.scale > 0
        out = np.zeros_like(X)
        out[:, live] = (X[:, live] - self.mean[live]) / self.scale[live]
        return out

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "ScalerParams":
        return cls(_frozen(np.array(doc["mean"], dtype=float)),
                   _frozen(np.array(doc["scale"], dtype=float)))


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, ScalerParams]:
    """z-score both partitions with the training mean and population sd.

    Columns constant on the training partition become all-zero in both.
    """
    params = ScalerParams.fit(train.X)
    return (
        Dataset(train.feature_names, params.transform(train.X), train.y),
        Dataset(test.feature_names, params.transform(test.X), test.y),
        params,
    )


# ---------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class SyntheticSpec:
    """Desk-scale stand-in for an intrusion export.

    Columns are laid out as ``inf_*`` (class-dependent Gaussians), ``noise_*``
    (standard normal, label-free) and ``corr_<i>_a`` / ``corr_<i>_b`` pairs
    where ``b = a + correlation_noise * N(0, 1)``, so the total width is
    ``n_informative + n_noise + 2 * n_correlated_pairs``. Class means differ by
    ``class_separation`` along each informative axis (unit variance).
    """

    n_rows: int = 2000
    n_informative: int = 3
    n_noise: int = 5
    n_correlated_pairs: int = 0
    positive_fraction: float = 0.5
    class_separation: float = 4.0
    correlation_noise: float = 0.05
    label_column: str = field(default="Label", compare=False)

    def validate(self) -> None:
        if self.n_rows < 2:
            raise DataError("n_rows must be at least 2")
        if min(self.n_informative, self.n_noise, self.n_correlated_pairs) < 0:
            raise DataError("feature counts must be nonnegative")
        if self.n_features == 0:
            raise DataError("spec yields no features")
        if not 0.0 < self.positive_fraction < 1.0:
            raise DataError("positive_fraction must lie strictly inside (0, 1)")
        if self.class_separation < 0:
            raise DataError("class_separation must be nonnegative")
        if self.correlation_noise <= 0:
            raise DataError("correlation_noise must be positive")

    @property
    def n_features(self) -> int:
        return self.n_informative + self.n_noise + 2 * self.n_correlated_pairs

    def feature_names(self) -> tuple[str, ...]:
        names = [f"inf_{i}" for i in range(self.n_informative)]
        names += [f"noise_{i}" for i in range(self.n_noise)]
        for i in range(self.n_correlated_pairs):
            names += [f"corr_{i}_a", f"corr_{i}_b"]
        return tuple(names)

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_informative": self.n_informative,
            "n_noise": self.n_noise,
            "n_correlated_pairs": self.n_correlated_pairs,
            "positive_fraction": self.positive_fraction,
            "class_separation": self.class_separation,
            "correlation_noise": self.correlation_noise,
        }


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> Dataset:
    spec.validate()
    rng = np.random.default_rng(seed)
    n = spec.n_rows
    n_pos = min(max(int(round(n * spec.positive_fraction)), 1), n - 1)
    y = np.zeros(n, dtype=np.int8)
    y[rng.permutation(n)[:n_pos]] = 1

    half = spec.class_separation / 2.0
    sign = np.where(y == 1, 1.0, -1.0)[:, None]
    informative = rng.standard_normal((n, spec.n_informative)) + sign * half
    noise = rng.standard_normal((n, spec.n_noise))
    blocks = [informative, noise]
    for _ in range(spec.n_correlated_pairs):
        g = rng.standard_normal(n)
        blocks.append(np.column_stack([g, g + spec.correlation_noise * rng.standard_normal(n)]))
    X = np.hstack(blocks) if blocks else np.empty((n, 0))
    return Dataset(spec.feature_names(), X, y)


def feature_index(names: Sequence[str], name: str) -> int:
    try:
        return list(names).index(name)
    except ValueError:
        raise DataError(f"unknown feature {name!r}") from None
