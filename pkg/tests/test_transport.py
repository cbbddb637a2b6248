import itertools
import logging
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import sinkhorn_feasible
from corrda.transport import (
    SolverError,
    TransportationInstance,
    UnbalancedInstanceError,
    lp_subproblem,
    solve_general_lp,
    solve_network_simplex,
    solve_reference,
)
from corrda.transport.instance import flow_objective

SOLVERS = [solve_network_simplex, solve_reference]


def brute_force_assignment(costs):
    n = costs.shape[0]
    return min(sum(costs[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def assert_feasible(sol, inst):
    np.testing.assert_array_equal(sol.flow_units.sum(axis=1), inst.supply_units)
    np.testing.assert_array_equal(sol.flow_units.sum(axis=0), inst.demand_units)
    assert np.all(sol.flow_units >= 0)


class TestInstance:
    def test_uniform_marginals_exact(self):
        inst = TransportationInstance.uniform(np.zeros((4, 6)))
        assert inst.unit == 12
        assert inst.supply_units.tolist() == [3] * 4 and inst.demand_units.tolist() == [2] * 6
        np.testing.assert_allclose(inst.supplies, 0.25)

    def test_from_marginals(self):
        inst = TransportationInstance.from_marginals(np.zeros((2, 3)), [Fraction(1, 3), Fraction(2, 3)], [0.5, 0.25, 0.25])
        assert inst.unit == 12
        assert inst.supply_units.tolist() == [4, 8]

    def test_unbalanced(self):
        with pytest.raises(UnbalancedInstanceError):
            TransportationInstance.from_marginals(np.zeros((2, 2)), [0.5, 0.5], [0.5, 0.6])

    def test_nonpositive_or_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            TransportationInstance(np.zeros((1, 1)), [0], [0], 1)
        with pytest.raises(ValueError):
            TransportationInstance.uniform(np.array([[np.inf]]))


@pytest.mark.parametrize("solve", SOLVERS)
class TestSolverExamples:
    def test_zero_cost_matching(self, solve):
        inst = TransportationInstance.uniform([[0.0, 1.0], [1.0, 0.0]])
        sol = solve(inst)
        np.testing.assert_array_equal(sol.flow, [[0.5, 0.0], [0.0, 0.5]])
        assert sol.objective == 0.0

    def test_forced_flow(self, solve):
        inst = TransportationInstance.from_marginals([[3.0, 5.0]], [1], [0.5, 0.5])
        sol = solve(inst)
        np.testing.assert_array_equal(sol.flow, [[0.5, 0.5]])
        assert sol.objective == 4.0

    def test_three_by_three_brute_force(self, solve, rng):
        for _ in range(10):
            c = rng.integers(-9, 10, size=(3, 3)).astype(float)
            inst = TransportationInstance.from_marginals(c, [1, 1, 1], [1, 1, 1])
            assert solve(inst).objective == pytest.approx(brute_force_assignment(c), abs=1e-12)

    def test_constant_shift(self, solve, rng):
        inst = TransportationInstance.uniform(rng.normal(size=(5, 7)))
        base = solve(inst).objective
        assert solve(inst.shifted(2.5)).objective == pytest.approx(base + 2.5, abs=1e-12)

    def test_single_cell(self, solve):
        sol = solve(TransportationInstance.uniform([[-3.0]]))
        assert sol.objective == -3.0


class TestNetworkSimplex:
    def test_matches_reference_random_integer(self, rng):
        for _ in range(30):
            c = rng.integers(-9, 10, size=(5, 7)).astype(float)
            inst = TransportationInstance.uniform(c)
            a, b = solve_network_simplex(inst), solve_reference(inst)
            assert_feasible(a, inst)
            assert_feasible(b, inst)
            assert a.objective == pytest.approx(b.objective, abs=1e-9)

    @pytest.mark.parametrize("rule", ["first_eligible", "block_search"])
    @pytest.mark.parametrize("bland_after", [0, 3, 64])
    def test_pivot_rules_agree(self, rng, rule, bland_after):
        for _ in range(10):
            m, n = rng.integers(2, 15, size=2)
            c = rng.integers(0, 4, size=(m, n)).astype(float)  # many ties, heavy degeneracy
            inst = TransportationInstance.uniform(c)
            sol = solve_network_simplex(inst, pivot_rule=rule, bland_after=bland_after)
            assert_feasible(sol, inst)
            assert sol.objective == pytest.approx(solve_reference(inst).objective, abs=1e-9)

    def test_vertex_sparsity(self, rng):
        for m, n in [(6, 9), (20, 20), (31, 17)]:
            inst = TransportationInstance.uniform(rng.normal(size=(m, n)))
            sol = solve_network_simplex(inst)
            assert np.count_nonzero(sol.flow_units) <= m + n - 1
            assert sol.basis_size == m + n - 1
            assert len(sol.basis[0]) == m + n - 1

    def test_basis_is_spanning_tree(self, rng):
        m, n = 8, 11
        sol = solve_network_simplex(TransportationInstance.uniform(rng.normal(size=(m, n))))
        root = list(range(m + n))

        def find(x):
            while root[x] != x:
                x = root[x]
            return x

        for r, c in zip(*sol.basis):
            a, b = find(r), find(m + c)
            assert a != b, "basis contains a cycle"
            root[a] = b

    def test_birkhoff_vertices(self, rng):
        # Equal sizes: the LP optimum equals the best permutation matrix.
        for n in range(1, 7):
            c = rng.normal(size=(n, n))
            sol = solve_network_simplex(TransportationInstance.uniform(c))
            assert sol.objective == pytest.approx(brute_force_assignment(c) / n, abs=1e-12)

    def test_objective_is_flow_cost(self, rng):
        inst = TransportationInstance.uniform(rng.normal(size=(9, 4)))
        sol = solve_network_simplex(inst)
        assert sol.objective == flow_objective(inst.costs, sol.flow_units, inst.unit)

    def test_agrees_with_general_lp(self, rng):
        inst = TransportationInstance.uniform(rng.normal(size=(30, 45)))
        assert solve_network_simplex(inst).objective == pytest.approx(solve_general_lp(inst).objective, abs=1e-9)

    def test_pivot_limit(self, rng):
        inst = TransportationInstance.uniform(rng.normal(size=(20, 20)))
        with pytest.raises(SolverError, match="pivot limit"):
            solve_network_simplex(inst, max_pivots=1)

    def test_unknown_rule(self):
        with pytest.raises(ValueError, match="pivot rule"):
            solve_network_simplex(TransportationInstance.uniform([[1.0]]), pivot_rule="dantzig")

    def test_debug_dump(self, caplog):
        inst = TransportationInstance.uniform([[0.0, 1.0], [1.0, 0.0]])
        with caplog.at_level(logging.DEBUG, logger="corrda.transport.network_simplex"):
            solve_network_simplex(inst, debug=True)
        assert sum("basis arc" in r.message for r in caplog.records) == 3

    def test_speed_against_general_lp(self):
        rng = np.random.default_rng(0)
        xs, xt = rng.normal(size=(400, 2)), rng.normal(size=(400, 2))
        inst = TransportationInstance.uniform(((xs[:, None] - xt[None]) ** 2).sum(-1))
        solve_network_simplex(inst)  # JIT warm-up
        t0 = time.perf_counter()
        ns = solve_network_simplex(inst)
        t_ns = time.perf_counter() - t0
        t0 = time.perf_counter()
        lp = solve_general_lp(inst)
        t_lp = time.perf_counter() - t0
        assert ns.objective == pytest.approx(lp.objective, abs=1e-9)
        assert t_ns < 1.0
        assert t_lp >= 10 * t_ns


class TestLpSubproblem:
    def test_zero_gradient(self):
        c = lp_subproblem(np.zeros((3, 5)))
        np.testing.assert_allclose(c.sum(axis=1), 1.0)
        np.testing.assert_allclose(c.sum(axis=0), 3 / 5)

    def test_dominant_permutation(self, rng):
        perm = [2, 0, 1]
        g = rng.uniform(0, 0.1, size=(3, 3))
        g[range(3), perm] = -5.0
        # Brute force over the six permutation vertices confirms the pattern.
        best = min(itertools.permutations(range(3)), key=lambda p: sum(g[i, p[i]] for i in range(3)))
        assert list(best) == perm
        np.testing.assert_array_equal(lp_subproblem(g), np.eye(3)[perm])

    def test_marginals_exact(self, rng):
        for n_s, n_t in [(7, 5), (6, 9), (12, 8)]:
            c = lp_subproblem(rng.normal(size=(n_s, n_t)))
            np.testing.assert_allclose(c.sum(axis=1), 1.0, atol=1e-14)
            np.testing.assert_allclose(c.sum(axis=0), n_s / n_t, atol=1e-14)
            assert c.min() >= 0

    def test_optimality_certificate(self, rng):
        g = rng.normal(size=(6, 8))
        best = np.sum(g * lp_subproblem(g))
        for _ in range(100):
            assert best <= np.sum(g * sinkhorn_feasible(rng, 6, 8, sparsity=0.5)) + 1e-12

    @pytest.mark.parametrize("solver", ["reference", "general_lp"])
    def test_alternate_solvers(self, rng, solver):
        g = rng.normal(size=(5, 4))
        assert np.sum(g * lp_subproblem(g, solver)) == pytest.approx(np.sum(g * lp_subproblem(g)), abs=1e-9)

    def test_nonfinite_gradient(self):
        with pytest.raises(ValueError):
            lp_subproblem(np.array([[np.nan]]))
