"""Successive shortest augmenting paths with node potentials.

Structurally independent of the network simplex: it keeps a dual-feasible
potential vector and grows a primal flow one shortest path at a time, where
the simplex keeps a primal-feasible tree and repairs the duals. Used as the
verification oracle for :mod:`corrda.transport.network_simplex`.
"""

from __future__ import annotations

import numpy as np

from .instance import FlowSolution, SolverError, TransportationInstance, flow_objective


def _dense_dijkstra(rcost: np.ndarray, flow: np.ndarray, excess: np.ndarray):
    """Multi-source Dijkstra on the residual bipartite graph.

    Sources with remaining supply start at distance 0. Forward arcs
    ``i -> j`` always exist; backward arcs ``j -> i`` exist where
    ``flow[i, j] > 0`` and have reduced cost ``-rcost[i, j]`` (zero under
    complementary slackness, clipped at 0 for round-off).
    """
    m, n = rcost.shape
    dist = np.full(m + n, np.inf)
    pred = np.full(m + n, -1, dtype=np.int64)
    done = np.zeros(m + n, dtype=bool)
    dist[:m][excess > 0] = 0.0
    for _ in range(m + n):
        masked = np.where(done, np.inf, dist)
        x = int(np.argmin(masked))
        if not np.isfinite(masked[x]):
            break
        done[x] = True
        if x < m:
            cand = dist[x] + rcost[x]
            tgt = dist[m:]
            better = (cand < tgt) & ~done[m:]
            tgt[better] = cand[better]
            pred[m:][better] = x
        else:
            j = x - m
            back = flow[:, j] > 0
            cand = dist[x] + np.maximum(-rcost[:, j], 0.0)
            better = back & (cand < dist[:m]) & ~done[:m]
            dist[:m][better] = cand[better]
            pred[:m][better] = x
    return dist, pred


def solve_reference(inst: TransportationInstance, max_augmentations: int | None = None) -> FlowSolution:
    """Optimal flow of ``inst`` by successive shortest paths."""
    costs = inst.costs
    m, n = costs.shape
    flow = np.zeros((m, n), dtype=np.int64)
    excess = inst.supply_units.copy()
    deficit = inst.demand_units.copy()
    # Dual-feasible start: every arc leaves a source, so p_sink = min column cost.
    pot = np.concatenate([np.zeros(m), costs.min(axis=0)])
    if max_augmentations is None:
        max_augmentations = 4 * (m + n) * (m + n)
    for _ in range(max_augmentations):
        if not deficit.any():
            break
        rcost = costs + pot[:m, None] - pot[None, m:]
        dist, pred = _dense_dijkstra(rcost, flow, excess)
        sink_dist = np.where(deficit > 0, dist[m:], np.inf)
        j = int(np.argmin(sink_dist))
        if not np.isfinite(sink_dist[j]):
            raise SolverError("residual graph disconnected; instance infeasible")
        # Cap distances at the target's so reduced costs stay nonnegative.
        pot = pot + np.minimum(dist, sink_dist[j])

        path = []
        x = m + j
        amount = deficit[j]
        while True:
            p = int(pred[x])
            if p < 0:
                break
            if x >= m:
                path.append((p, x - m, +1))
            else:
                path.append((x, p - m, -1))
                amount = min(amount, flow[x, p - m])
            x = p
        amount = min(amount, excess[x])
        for i, jj, sign in path:
            flow[i, jj] += sign * amount
        excess[x] -= amount
        deficit[j] -= amount
    else:
        raise SolverError("successive shortest paths exceeded its augmentation budget")
    return FlowSolution(
        flow_units=flow,
        unit=inst.unit,
        objective=flow_objective(costs, flow, inst.unit),
        basis_size=int(np.count_nonzero(flow)),
    )
