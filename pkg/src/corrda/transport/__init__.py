"""Transportation (bipartite min-cost flow) solvers and the Frank-Wolfe linear oracle."""

from __future__ import annotations

import numpy as np

from .baseline import solve_general_lp
from .instance import (
    FlowSolution,
    SolverError,
    TransportationInstance,
    UnbalancedInstanceError,
)
from .network_simplex import solve_network_simplex
from .reference import solve_reference

SOLVERS = {
    "network_simplex": solve_network_simplex,
    "reference": solve_reference,
    "general_lp": solve_general_lp,
}


def lp_subproblem(gradient, solver: str = "network_simplex") -> np.ndarray:
    """Minimise ``<gradient, C>`` over correspondence matrices.

    The feasible set has rows summing to 1 and columns to ``n_s / n_t``.
    With costs ``G = n_s * gradient`` this is the transportation problem
    with supplies ``1/n_s`` and demands ``1/n_t``; the minimiser is
    ``n_s * T*``.
    """
    gradient = np.asarray(gradient, dtype=np.float64)
    if not np.all(np.isfinite(gradient)):
        raise ValueError("gradient contains non-finite entries")
    n_s = gradient.shape[0]
    inst = TransportationInstance.uniform(n_s * gradient)
    sol = SOLVERS[solver](inst)
    # flow_units * n_s / unit, with unit / n_s the integer supply per row.
    return sol.flow_units / inst.supply_units[0]


__all__ = [
    "FlowSolution",
    "SOLVERS",
    "SolverError",
    "TransportationInstance",
    "UnbalancedInstanceError",
    "lp_subproblem",
    "solve_general_lp",
    "solve_network_simplex",
    "solve_reference",
]
