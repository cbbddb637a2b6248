"""Bipartite transportation instances with exactly balanced marginals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

# Integer supplies must stay comfortably inside int64 after pivoting arithmetic.
_MAX_UNITS = 2**53


class UnbalancedInstanceError(ValueError):
    """Total supply differs from total demand."""


class SolverError(RuntimeError):
    """A transportation solver failed to reach an optimal basis."""


@dataclass(frozen=True)
class TransportationInstance:
    """Uncapacitated bipartite min-cost flow problem.

    Marginals are held as integers over a common denominator ``unit`` so
    that supply and demand balance exactly; the real supply of source ``i``
    is ``supply_units[i] / unit``.

    Use :meth:`uniform` for the equal-mass marginals of the correspondence
    subproblem, or :meth:`from_marginals` for arbitrary rational ones.
    """

    costs: np.ndarray
    supply_units: np.ndarray
    demand_units: np.ndarray
    unit: int

    def __post_init__(self):
        costs = np.ascontiguousarray(self.costs, dtype=np.float64)
        if costs.ndim != 2 or costs.shape[0] < 1 or costs.shape[1] < 1:
            raise ValueError(f"costs must be a non-empty 2-D matrix, got shape {costs.shape}")
        if not np.all(np.isfinite(costs)):
            raise ValueError("costs must be finite")
        sup = np.asarray(self.supply_units, dtype=np.int64)
        dem = np.asarray(self.demand_units, dtype=np.int64)
        if sup.shape != (costs.shape[0],) or dem.shape != (costs.shape[1],):
            raise ValueError(
                f"marginal shapes {sup.shape}, {dem.shape} do not match costs {costs.shape}"
            )
        if np.any(sup <= 0) or np.any(dem <= 0):
            raise ValueError("supplies and demands must be strictly positive")
        if int(sup.sum()) != int(dem.sum()):
            raise UnbalancedInstanceError(
                f"total supply {int(sup.sum())}/{self.unit} != total demand {int(dem.sum())}/{self.unit}"
            )
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "supply_units", sup)
        object.__setattr__(self, "demand_units", dem)

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape

    @property
    def supplies(self) -> np.ndarray:
        return self.supply_units / self.unit

    @property
    def demands(self) -> np.ndarray:
        return self.demand_units / self.unit

    @property
    def total_units(self) -> int:
        return int(self.supply_units.sum())

    @classmethod
    def uniform(cls, costs) -> "TransportationInstance":
        """Supplies ``1/n_s`` and demands ``1/n_t``, scaled by ``lcm(n_s, n_t)``."""
        costs = np.asarray(costs, dtype=np.float64)
        m, n = costs.shape
        unit = math.lcm(m, n)
        return cls(
            costs,
            np.full(m, unit // m, dtype=np.int64),
            np.full(n, unit // n, dtype=np.int64),
            unit,
        )

    @classmethod
    def from_marginals(
        cls, costs, supplies: Sequence, demands: Sequence, max_denominator: int = 10**6
    ) -> "TransportationInstance":
        """Build an instance from rational (or float-representable) marginals.

        Floats are rounded to the nearest fraction with denominator at most
        ``max_denominator`` before the balance check, which is then exact.
        """
        sup = [Fraction(s).limit_denominator(max_denominator) for s in supplies]
        dem = [Fraction(d).limit_denominator(max_denominator) for d in demands]
        if sum(sup) != sum(dem):
            raise UnbalancedInstanceError(f"total supply {sum(sup)} != total demand {sum(dem)}")
        unit = math.lcm(*(f.denominator for f in sup + dem))
        sup_units = [int(f * unit) for f in sup]
        dem_units = [int(f * unit) for f in dem]
        if sum(sup_units) >= _MAX_UNITS:
            raise ValueError("marginals need too fine a common denominator")
        return cls(np.asarray(costs, dtype=np.float64), sup_units, dem_units, unit)

    def shifted(self, k: float) -> "TransportationInstance":
        return TransportationInstance(self.costs + k, self.supply_units, self.demand_units, self.unit)


@dataclass(frozen=True)
class FlowSolution:
    """Optimal flow of a :class:`TransportationInstance`.

    ``flow_units`` is the exact integer flow; ``flow`` is its real value.
    ``basis`` lists the (row, col) arcs of the final spanning tree when the
    solver maintains one.
    """

    flow_units: np.ndarray
    unit: int
    objective: float
    basis_size: int
    pivots: int = 0
    basis: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def flow(self) -> np.ndarray:
        return self.flow_units / self.unit


def flow_objective(costs: np.ndarray, flow_units: np.ndarray, unit: int) -> float:
    return float(np.sum(costs * flow_units) / unit)
