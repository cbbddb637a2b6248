"""Ridge-regularised linear map from source features onto corresponded targets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .data import DataError, SampleSet

DEFAULT_RIDGE = 1e-3


@dataclass(frozen=True)
class LinearMap:
    """``x -> x @ weights`` with a ``d x d`` weight matrix and no intercept."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def identity(cls, d: int) -> "LinearMap":
        return cls(np.eye(d))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"w{k}" for k in range(self.weights.shape[1])])
            for row in self.weights:
                w.writerow([repr(float(v)) for v in row])
        return path

    @classmethod
    def from_csv(cls, path) -> "LinearMap":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        return cls(np.array([[float(v) for v in r] for r in rows if r]))


def fit_mapping(source, corresponded_targets, ridge: float = DEFAULT_RIDGE) -> LinearMap:
    """Closed-form ridge solution ``(Xs' Xs + ridge I)^-1 Xs' Y`` via Cholesky."""
    xs = source.features if isinstance(source, SampleSet) else np.asarray(source, dtype=np.float64)
    y = np.asarray(corresponded_targets, dtype=np.float64)
    if not ridge > 0:
        raise ValueError(f"ridge must be positive, got {ridge}")
    if y.shape != xs.shape:
        raise ValueError(f"targets shape {y.shape} does not match source {xs.shape}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(y))):
        raise DataError("non-finite input to the mapping regression")
    gram = xs.T @ xs + ridge * np.eye(xs.shape[1])
    return LinearMap(cho_solve(cho_factor(gram), xs.T @ y))


def apply_mapping(m: LinearMap, s: SampleSet) -> SampleSet:
    if s.d != m.weights.shape[0]:
        raise ValueError(f"map is {m.weights.shape[0]}-dimensional, samples are {s.d}-dimensional")
    return s.with_features(s.features @ m.weights)
