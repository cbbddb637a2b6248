"""Gaussian-kernel domain graphs and the cross-domain distance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .data import SampleSet


class DegenerateBandwidthError(ValueError):
    """All samples coincide, so the heuristic kernel width is zero."""


def _features(s) -> np.ndarray:
    return s.features if isinstance(s, SampleSet) else np.asarray(s, dtype=np.float64)


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric zero-diagonal adjacency ``exp(-|xi - xj|^2 / sigma^2)``."""

    values: np.ndarray
    sigma: float

    @property
    def n(self) -> int:
        return self.values.shape[0]


def heuristic_sigma(s) -> float:
    """Mean Euclidean distance over unordered sample pairs ``i < j``."""
    x = _features(s)
    if x.shape[0] < 2:
        raise ValueError("bandwidth heuristic needs at least 2 samples")
    sigma = float(pdist(x).mean())
    if sigma == 0.0:
        raise DegenerateBandwidthError("all samples are identical; supply sigma explicitly")
    return sigma


def build_affinity(s, sigma: float | None = None) -> AffinityMatrix:
    x = _features(s)
    if x.shape[0] < 2:
        raise ValueError("affinity needs at least 2 samples")
    if sigma is None:
        sigma = heuristic_sigma(x)
    elif not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    w = squareform(np.exp(-pdist(x, "sqeuclidean") / sigma**2))
    w.setflags(write=False)
    return AffinityMatrix(w, float(sigma))


def build_cross_cost(source, target) -> np.ndarray:
    """``[i, j] = |x_i^s - x_j^t|_2``: the cost of the initial correspondence LP."""
    xs, xt = _features(source), _features(target)
    if xs.shape[1] != xt.shape[1]:
        raise ValueError(f"feature dimensions differ: {xs.shape[1]} vs {xt.shape[1]}")
    return cdist(xs, xt)
