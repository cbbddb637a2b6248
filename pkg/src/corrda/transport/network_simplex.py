"""Network simplex for the uncapacitated bipartite transportation problem.

The basis is a spanning tree over the ``m + n`` nodes (sources ``0..m-1``,
sinks ``m..m+n-1``) holding exactly ``m + n - 1`` arcs. Flows on basic arcs
are integers in units of ``1 / instance.unit`` so every basic solution is
exactly feasible. Node potentials satisfy ``pot[i] + pot[m + j] = cost[i, j]``
on each basic arc, which makes ``cost[i, j] - pot[i] - pot[m + j]`` the
reduced cost used for pricing.
"""

from __future__ import annotations

import logging

import numpy as np
from numba import njit

from .instance import FlowSolution, SolverError, TransportationInstance, flow_objective

logger = logging.getLogger(__name__)

PIVOT_RULES = {"first_eligible": 0, "block_search": 1}

_OPTIMAL = 0
_PIVOT_LIMIT = 1


@njit(cache=True)
def _northwest_corner(supply, demand, brow, bcol, bflow):
    m = supply.shape[0]
    n = demand.shape[0]
    s = supply.copy()
    d = demand.copy()
    i = 0
    j = 0
    for k in range(m + n - 1):
        q = min(s[i], d[j])
        brow[k] = i
        bcol[k] = j
        bflow[k] = q
        s[i] -= q
        d[j] -= q
        # Staircase path: when row and column exhaust together the next
        # cell is a degenerate zero-flow basic arc.
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif s[i] == 0:
            i += 1
        else:
            j += 1


@njit(cache=True)
def _link(h, node, head, nxt, prv):
    nxt[h] = head[node]
    prv[h] = -1
    if head[node] >= 0:
        prv[head[node]] = h
    head[node] = h


@njit(cache=True)
def _unlink(h, node, head, nxt, prv):
    if prv[h] >= 0:
        nxt[prv[h]] = nxt[h]
    else:
        head[node] = nxt[h]
    if nxt[h] >= 0:
        prv[nxt[h]] = prv[h]


@njit(cache=True)
def _hang(q, p, k, m, cost, brow, bcol, head, nxt, parent, predk, depth, pot, queue):
    """Attach the subtree containing ``q`` below ``p`` through basic arc ``k``.

    Walks the subtree breadth-first, refreshing parents, depths and
    potentials. The subtree is reachable from ``q`` without crossing ``k``.
    """
    parent[q] = p
    predk[q] = k
    depth[q] = depth[p] + 1
    pot[q] = cost[brow[k], bcol[k]] - pot[p]
    qh = 0
    qt = 0
    queue[qt] = q
    qt += 1
    while qh < qt:
        x = queue[qh]
        qh += 1
        h = head[x]
        while h >= 0:
            kk = h >> 1
            if kk != predk[x]:
                y = m + bcol[kk] if x < m else brow[kk]
                parent[y] = x
                predk[y] = kk
                depth[y] = depth[x] + 1
                pot[y] = cost[brow[kk], bcol[kk]] - pot[x]
                queue[qt] = y
                qt += 1
            h = nxt[h]


@njit(cache=True)
def _network_simplex(cost, supply, demand, rule, bland_after, max_pivots, eps):
    m, n = cost.shape
    nn = m + n
    nb = nn - 1
    brow = np.empty(nb, np.int64)
    bcol = np.empty(nb, np.int64)
    bflow = np.empty(nb, np.int64)
    _northwest_corner(supply, demand, brow, bcol, bflow)

    head = np.full(nn, -1, np.int64)
    nxt = np.full(2 * nb, -1, np.int64)
    prv = np.full(2 * nb, -1, np.int64)
    for k in range(nb):
        _link(2 * k, brow[k], head, nxt, prv)
        _link(2 * k + 1, m + bcol[k], head, nxt, prv)

    parent = np.full(nn, -1, np.int64)
    predk = np.full(nn, -1, np.int64)
    depth = np.zeros(nn, np.int64)
    pot = np.zeros(nn, np.float64)
    queue = np.empty(nn, np.int64)

    # Root the tree at source 0 with potential 0.
    h = head[0]
    while h >= 0:
        kk = h >> 1
        _hang(m + bcol[kk], 0, kk, m, cost, brow, bcol, head, nxt, parent, predk, depth, pot, queue)
        h = nxt[h]

    cyc_pos = np.empty(nn, np.int64)
    cyc_dec = np.empty(nn, np.bool_)
    cyc_side = np.empty(nn, np.int64)

    total = m * n
    block = max(int(np.sqrt(total)), 16)
    ptr = 0
    streak = 0
    pivots = 0
    status = _OPTIMAL
    while True:
        # ---- pricing ----
        ent = -1
        if streak >= bland_after:
            # Bland: lowest-index eligible arc.
            for i in range(m):
                pi = pot[i]
                for j in range(n):
                    if cost[i, j] - pi - pot[m + j] < -eps:
                        ent = i * n + j
                        break
                if ent >= 0:
                    break
        elif rule == 0:
            i = ptr // n
            j = ptr - i * n
            for _ in range(total):
                if cost[i, j] - pot[i] - pot[m + j] < -eps:
                    ent = i * n + j
                    break
                j += 1
                if j == n:
                    j = 0
                    i += 1
                    if i == m:
                        i = 0
            if ent >= 0:
                ptr = ent + 1 if ent + 1 < total else 0
        else:
            best = -eps
            cnt = 0
            i = ptr // n
            j = ptr - i * n
            for _ in range(total):
                rc = cost[i, j] - pot[i] - pot[m + j]
                if rc < best:
                    best = rc
                    ent = i * n + j
                j += 1
                if j == n:
                    j = 0
                    i += 1
                    if i == m:
                        i = 0
                cnt += 1
                if cnt == block:
                    if ent >= 0:
                        break
                    cnt = 0
            if ent >= 0:
                ptr = i * n + j
        if ent < 0:
            break
        if pivots >= max_pivots:
            status = _PIVOT_LIMIT
            break
        pivots += 1

        ei = ent // n
        ej = ent - ei * n
        u = ei
        v = m + ej

        # ---- cycle through the tree: v -> ... -> apex -> ... -> u ----
        a = u
        b = v
        clen = 0
        while a != b:
            if depth[a] >= depth[b]:
                cyc_pos[clen] = predk[a]
                cyc_dec[clen] = a < m
                cyc_side[clen] = 0
                a = parent[a]
            else:
                cyc_pos[clen] = predk[b]
                cyc_dec[clen] = b >= m
                cyc_side[clen] = 1
                b = parent[b]
            clen += 1

        bland = streak >= bland_after
        delta = np.int64(-1)
        leave = -1
        leave_side = 0
        leave_key = np.int64(-1)
        for c in range(clen):
            if not cyc_dec[c]:
                continue
            k = cyc_pos[c]
            f = bflow[k]
            key = brow[k] * n + bcol[k]
            if delta < 0 or f < delta or (f == delta and bland and key < leave_key):
                delta = f
                leave = k
                leave_side = cyc_side[c]
                leave_key = key

        for c in range(clen):
            k = cyc_pos[c]
            if cyc_dec[c]:
                bflow[k] -= delta
            else:
                bflow[k] += delta
        streak = streak + 1 if delta == 0 else 0

        # ---- basis exchange ----
        _unlink(2 * leave, brow[leave], head, nxt, prv)
        _unlink(2 * leave + 1, m + bcol[leave], head, nxt, prv)
        brow[leave] = ei
        bcol[leave] = ej
        bflow[leave] = delta
        _link(2 * leave, ei, head, nxt, prv)
        _link(2 * leave + 1, v, head, nxt, prv)
        if leave_side == 0:
            _hang(u, v, leave, m, cost, brow, bcol, head, nxt, parent, predk, depth, pot, queue)
        else:
            _hang(v, u, leave, m, cost, brow, bcol, head, nxt, parent, predk, depth, pot, queue)

    return brow, bcol, bflow, pivots, status


def solve_network_simplex(
    inst: TransportationInstance,
    pivot_rule: str = "block_search",
    bland_after: int = 64,
    max_pivots: int | None = None,
    debug: bool = False,
) -> FlowSolution:
    """Optimal basic solution of ``inst`` by the primal network simplex.

    Parameters
    ----------
    inst : TransportationInstance
        Balanced instance; marginals are used in exact integer units.
    pivot_rule : {"block_search", "first_eligible"}
        Entering-arc rule. Both switch to Bland's lowest-index rule (entering
        and leaving) after ``bland_after`` consecutive degenerate pivots and
        back once a pivot moves flow.
    max_pivots : int, optional
        Pivot budget; defaults to ``50 * m * n + 1000``.
    debug : bool
        Log the final spanning tree arcs at DEBUG level.
    """
    if pivot_rule not in PIVOT_RULES:
        raise ValueError(f"unknown pivot rule {pivot_rule!r}; expected one of {sorted(PIVOT_RULES)}")
    m, n = inst.shape
    if max_pivots is None:
        max_pivots = 50 * m * n + 1000
    scale = float(np.max(np.abs(inst.costs)))
    eps = 1e-12 * scale
    brow, bcol, bflow, pivots, status = _network_simplex(
        inst.costs, inst.supply_units, inst.demand_units,
        PIVOT_RULES[pivot_rule], bland_after, max_pivots, eps,
    )
    if status != _OPTIMAL:
        raise SolverError(f"network simplex hit the pivot limit ({max_pivots}) on a {m}x{n} instance")
    flow = np.zeros((m, n), dtype=np.int64)
    flow[brow, bcol] = bflow
    if debug:
        for r, c, f in zip(brow, bcol, bflow):
            logger.debug("basis arc (%d, %d) flow %d/%d", r, c, f, inst.unit)
    return FlowSolution(
        flow_units=flow,
        unit=inst.unit,
        objective=flow_objective(inst.costs, flow, inst.unit),
        basis_size=m + n - 1,
        pivots=int(pivots),
        basis=(brow, bcol),
    )
