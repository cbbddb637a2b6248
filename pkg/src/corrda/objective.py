"""Correspondence objective: point matching, graph-structure matching and group lasso.

For a correspondence ``C`` (n_s x n_t)::

    f1 = |C Xt - Xs|_F^2
    f2 = |C Dt - r Ds C|_F^2,           r = n_t / n_s
    f3 = sum_j sum_c |C[I_c, j]|_2
    f  = f1 / (n_s d) + lambda_s f2 + lambda_g f3

subject to ``C >= 0``, rows summing to 1 and columns to ``n_s / n_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .affinity import AffinityMatrix, build_affinity
from .data import SampleSet


class ObjectiveValue(NamedTuple):
    total: float
    f1: float
    f2: float
    f3: float


@dataclass(frozen=True)
class ObjectiveContext:
    xs: np.ndarray
    xt: np.ndarray
    ds: np.ndarray
    dt: np.ndarray
    labels: np.ndarray
    lambda_s: float = 0.0
    lambda_g: float = 0.0
    _onehot: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n_s, d = self.xs.shape
        n_t = self.xt.shape[0]
        if self.xt.shape[1] != d:
            raise ValueError(f"feature dimensions differ: {d} vs {self.xt.shape[1]}")
        if self.ds.shape != (n_s, n_s) or self.dt.shape != (n_t, n_t):
            raise ValueError("affinity shapes do not match the sample counts")
        if self.labels.shape != (n_s,):
            raise ValueError("need one label per source sample")
        if self.lambda_s < 0 or self.lambda_g < 0:
            raise ValueError("regularisation weights must be nonnegative")
        classes, codes = np.unique(self.labels, return_inverse=True)
        onehot = np.zeros((n_s, classes.size))
        onehot[np.arange(n_s), codes] = 1.0
        object.__setattr__(self, "_onehot", onehot)

    @classmethod
    def build(
        cls,
        source: SampleSet,
        target: SampleSet,
        lambda_s: float = 0.0,
        lambda_g: float = 0.0,
        ds: AffinityMatrix | None = None,
        dt: AffinityMatrix | None = None,
    ) -> "ObjectiveContext":
        if not source.labelled:
            raise ValueError("the source sample set must be labelled")
        ds = ds if ds is not None else build_affinity(source)
        dt = dt if dt is not None else build_affinity(target)
        return cls(source.features, target.features, ds.values, dt.values, source.labels, lambda_s, lambda_g)

    @property
    def n_s(self) -> int:
        return self.xs.shape[0]

    @property
    def n_t(self) -> int:
        return self.xt.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]

    @property
    def ratio(self) -> float:
        return self.n_t / self.n_s

    @property
    def class_index_sets(self) -> list[np.ndarray]:
        return [np.flatnonzero(col) for col in self._onehot.T]

    def _check(self, c):
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.n_s, self.n_t):
            raise ValueError(f"correspondence must be {self.n_s}x{self.n_t}, got {c.shape}")
        return c

    def block_norms(self, c) -> np.ndarray:
        """``[k, j] = |C[I_k, j]|_2`` for each class ``k`` and target ``j``."""
        return np.sqrt(self._onehot.T @ (c * c))


def eval_f(ctx: ObjectiveContext, c) -> ObjectiveValue:
    c = ctx._check(c)
    f1 = float(np.sum((c @ ctx.xt - ctx.xs) ** 2))
    f2 = float(np.sum((c @ ctx.dt - ctx.ratio * (ctx.ds @ c)) ** 2))
    f3 = float(ctx.block_norms(c).sum())
    total = f1 / (ctx.n_s * ctx.d) + ctx.lambda_s * f2 + ctx.lambda_g * f3
    return ObjectiveValue(total, f1, f2, f3)


def group_lasso_grad(ctx: ObjectiveContext, c) -> np.ndarray:
    """Entry ``(i, j)`` is ``C_ij / |C[I_c(i), j]|``, or 0 where that block norm is 0."""
    c = ctx._check(c)
    norms = ctx._onehot @ ctx.block_norms(c)
    out = np.zeros_like(c)
    nz = norms > 0
    out[nz] = c[nz] / norms[nz]
    return out


def grad_f(ctx: ObjectiveContext, c) -> np.ndarray:
    c = ctx._check(c)
    r = ctx.ratio
    g = 2.0 * (c @ ctx.xt - ctx.xs) @ ctx.xt.T / (ctx.n_s * ctx.d)
    if ctx.lambda_s:
        # 2 C Dt Dt' - 2r Ds C Dt' - 2r Ds' C Dt + 2r^2 Ds' Ds C, via the residual.
        resid = c @ ctx.dt - r * (ctx.ds @ c)
        g += ctx.lambda_s * 2.0 * (resid @ ctx.dt.T - r * (ctx.ds.T @ resid))
    if ctx.lambda_g:
        g += ctx.lambda_g * group_lasso_grad(ctx, c)
    return g


def eval_and_grad(ctx: ObjectiveContext, c) -> tuple[ObjectiveValue, np.ndarray]:
    """Objective and gradient sharing the ``C Xt``, ``C Dt`` and ``Ds C`` products."""
    c = ctx._check(c)
    n_s_d = ctx.n_s * ctx.d
    r = ctx.ratio
    res1 = c @ ctx.xt - ctx.xs
    f1 = float(np.sum(res1 * res1))
    g = 2.0 * res1 @ ctx.xt.T / n_s_d
    res2 = c @ ctx.dt - r * (ctx.ds @ c)
    f2 = float(np.sum(res2 * res2))
    if ctx.lambda_s:
        g += ctx.lambda_s * 2.0 * (res2 @ ctx.dt.T - r * (ctx.ds.T @ res2))
    block = ctx.block_norms(c)
    f3 = float(block.sum())
    if ctx.lambda_g:
        norms = ctx._onehot @ block
        nz = norms > 0
        g3 = np.zeros_like(c)
        g3[nz] = c[nz] / norms[nz]
        g += ctx.lambda_g * g3
    total = f1 / n_s_d + ctx.lambda_s * f2 + ctx.lambda_g * f3
    return ObjectiveValue(total, f1, f2, f3), g
