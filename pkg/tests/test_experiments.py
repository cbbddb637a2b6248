from dataclasses import replace

import numpy as np

from corrda.affinity import build_cross_cost
from corrda.cg import CgConfig
from corrda.data import MoonsSpec, generate_moons
from corrda.experiments import TOY_CONFIG, bench_flow, bench_toy, collect_subproblems
from corrda.pipeline import AdaptationConfig


class TestToy:
    def test_shapes_and_range(self):
        cfg = replace(TOY_CONFIG, cg=CgConfig(max_iters=5))
        res = bench_toy(angles=(10, 90), trials=2, classifier="1nn", cfg=cfg, per_class=15, n_test=60)
        assert res.na.shape == res.adapted.shape == (2, 2)
        assert np.all((res.na >= 0) & (res.na <= 100))
        assert [r[0] for r in res.summary_rows()] == [10, 90]
        # Same generator seeds at every angle, so a 90 degree rotation is harder than 10.
        assert res.na[1].mean() < res.na[0].mean()

    def test_parallel_matches_serial(self):
        cfg = replace(TOY_CONFIG, cg=CgConfig(max_iters=3))
        kw = dict(angles=(30,), trials=2, classifier="1nn", cfg=cfg, per_class=10, n_test=40)
        a, b = bench_toy(**kw), bench_toy(**kw, jobs=2)
        np.testing.assert_array_equal(a.adapted, b.adapted)


class TestFlow:
    def test_subproblem_sequence(self):
        cfg = AdaptationConfig(lambda_s=1e-3, cg=CgConfig(max_iters=4, gap_tolerance=1e-300))
        costs = collect_subproblems(10, cfg=cfg)
        src, tgt = generate_moons(MoonsSpec(per_class=10, rotation_deg=50, seed=0))
        assert len(costs) == 5
        np.testing.assert_array_equal(costs[0], build_cross_cost(src, tgt))
        assert all(c.shape == (20, 20) for c in costs)

    def test_trend(self):
        res = bench_flow(sizes=(10, 50), max_iters=3)
        assert all(n < b for n, b in zip(res.netsimplex_s, res.baseline_s))
        assert res.baseline_s[1] > res.baseline_s[0]
        assert res.netsimplex_s[1] > res.netsimplex_s[0]
        assert res.subproblems == [4, 4]
