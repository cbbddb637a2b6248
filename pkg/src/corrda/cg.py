"""Conditional gradient (Frank-Wolfe) over the correspondence polytope."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .objective import ObjectiveContext, eval_and_grad
from .transport import lp_subproblem

logger = logging.getLogger(__name__)


class InfeasibleStartError(ValueError):
    """The starting correspondence violates the polytope constraints."""


class NonFiniteObjectiveError(FloatingPointError):
    """The objective or its gradient became NaN or infinite."""


@dataclass(frozen=True)
class CgConfig:
    max_iters: int = 500
    gap_tolerance: float = 1e-5
    record_trace: bool = True
    solver: str = "network_simplex"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.gap_tolerance > 0:
            raise ValueError("gap_tolerance must be positive")


@dataclass
class CgTrace:
    objective: list[float] = field(default_factory=list)
    gap: list[float] = field(default_factory=list)
    step: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.gap)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective", "gap", "step"])
            for t, (f, g, a) in enumerate(zip(self.objective, self.gap, self.step), start=1):
                w.writerow([t, repr(f), repr(g), repr(a)])
        return path


def feasibility_error(c: np.ndarray) -> float:
    """Largest violation of ``C >= 0``, unit row sums and ``n_s/n_t`` column sums."""
    n_s, n_t = c.shape
    return float(max(
        max(0.0, -float(c.min())),
        np.abs(c.sum(axis=1) - 1.0).max(),
        np.abs(c.sum(axis=0) - n_s / n_t).max(),
    ))


def initialize_c0(cross_cost, solver: str = "network_simplex") -> np.ndarray:
    """Vertex minimising ``<cross_cost, C>``; the Frank-Wolfe starting point."""
    return lp_subproblem(cross_cost, solver=solver)


def run_cg(ctx: ObjectiveContext, cfg: CgConfig, c0, callback=None) -> tuple[np.ndarray, CgTrace]:
    """Minimise the correspondence objective from ``c0``.

    Iterates ``C <- C + 2/(t+2) (C_d - C)`` for ``t = 1, 2, ...`` where
    ``C_d`` minimises the linearisation at ``C``. Stops as soon as the
    duality gap ``<grad, C - C_d>`` is at most ``cfg.gap_tolerance`` (the
    current iterate is returned) or after ``cfg.max_iters`` linear
    subproblems (the last updated iterate is returned).

    ``callback(t, c, gap)``, if given, sees every iterate before its update.
    """
    c = np.array(c0, dtype=np.float64)
    if c.shape != (ctx.n_s, ctx.n_t):
        raise ValueError(f"c0 must be {ctx.n_s}x{ctx.n_t}, got {c.shape}")
    err = feasibility_error(c)
    if err > 1e-6:
        raise InfeasibleStartError(f"c0 violates the correspondence constraints by {err:.3g}")
    trace = CgTrace()
    for t in range(1, cfg.max_iters + 1):
        val, grad = eval_and_grad(ctx, c)
        if not (np.isfinite(val.total) and np.all(np.isfinite(grad))):
            raise NonFiniteObjectiveError(f"non-finite objective at iteration {t}")
        c_d = lp_subproblem(grad, solver=cfg.solver)
        gap = float(np.sum(grad * (c - c_d)))
        done = gap <= cfg.gap_tolerance
        if callback is not None:
            callback(t, c, gap)
        step = 0.0 if done else 2.0 / (t + 2)
        if cfg.record_trace:
            trace.objective.append(val.total)
            trace.gap.append(gap)
            trace.step.append(step)
        if done:
            trace.converged = True
            break
        c += step * (c_d - c)
    if not trace.converged:
        logger.info("conditional gradient stopped at the %d-iteration budget", cfg.max_iters)
    return c, trace
