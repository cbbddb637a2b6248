"""General-purpose LP baseline for timing comparisons.

Solves the transportation LP as a plain equality-constrained linear program
with no use of its network structure.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .instance import FlowSolution, SolverError, TransportationInstance


def _equality_constraints(m: int, n: int) -> sp.csr_matrix:
    rows = sp.kron(sp.eye(m), np.ones((1, n)))
    cols = sp.kron(np.ones((1, m)), sp.eye(n))
    return sp.vstack([rows, cols]).tocsr()


def solve_general_lp(inst: TransportationInstance, method: str = "highs-ds") -> FlowSolution:
    """Optimal flow of ``inst`` from scipy's generic simplex/IPM (HiGHS).

    The returned flow is real-valued; ``flow_units`` is the rounded
    integer flow and is only exact when the solver lands on a vertex.
    """
    m, n = inst.shape
    res = linprog(
        inst.costs.ravel(),
        A_eq=_equality_constraints(m, n),
        b_eq=np.concatenate([inst.supplies, inst.demands]),
        bounds=(0, None),
        method=method,
    )
    if res.status != 0:
        raise SolverError(f"linprog failed: {res.message}")
    flow = np.maximum(res.x.reshape(m, n), 0.0)
    units = np.rint(flow * inst.unit).astype(np.int64)
    return FlowSolution(
        flow_units=units,
        unit=inst.unit,
        objective=float(res.fun),
        basis_size=int(np.count_nonzero(flow > 1e-12)),
    )
