"""Desk-scale benchmarks: accuracy on rotated moons and LP solver timings."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .affinity import build_affinity, build_cross_cost
from .cg import CgConfig, initialize_c0, run_cg
from .data import MoonsSpec, generate_moons, generate_moons_test
from .objective import ObjectiveContext, grad_f
from .pipeline import AdaptationConfig, adapt, evaluate
from .transport import lp_subproblem

TOY_ANGLES = (10, 20, 30, 40, 50, 70, 90)
FLOW_SIZES = (25, 50, 100, 200)
# Fixed hyperparameters for the toy sweep (no per-angle tuning).
TOY_CONFIG = AdaptationConfig(lambda_s=1e-3, lambda_g=1e-2)
FLOW_MAX_ITERS = 20


def _map(fn, args, jobs):
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args))


# ---------------------------------------------------------------- toy accuracy


@dataclass
class ToyBenchResult:
    angles: tuple[int, ...]
    trials: int
    classifier: str
    na: np.ndarray  # (angles, trials), percent
    adapted: np.ndarray

    def summary_rows(self) -> list[list]:
        rows = []
        for i, a in enumerate(self.angles):
            rows.append([a, self.trials, float(self.na[i].mean()), float(self.adapted[i].mean()),
                         float(self.na[i].std()), float(self.adapted[i].std())])
        return rows

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["angle", "trials", "na_mean", "adapted_mean", "na_std", "adapted_std"])
            for r in self.summary_rows():
                w.writerow(r[:2] + [repr(v) for v in r[2:]])
        return path

    def trials_to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["angle", "trial", "na", "adapted"])
            for i, a in enumerate(self.angles):
                for k in range(self.trials):
                    w.writerow([a, k, repr(float(self.na[i, k])), repr(float(self.adapted[i, k]))])
        return path


def _toy_trial(args):
    angle, seed, per_class, n_test, cfg, classifier = args
    spec = MoonsSpec(per_class=per_class, rotation_deg=angle, seed=seed)
    src, tgt = generate_moons(spec)
    test = generate_moons_test(spec, n_test)
    na = evaluate(src, test, classifier, seed)
    res = adapt(src, tgt.unlabelled(), replace(cfg, seed=seed))
    return 100.0 * na, 100.0 * evaluate(res.adapted_source, test, classifier, seed)


def bench_toy(
    angles=TOY_ANGLES,
    trials: int = 10,
    classifier: str = "svm",
    cfg: AdaptationConfig = TOY_CONFIG,
    per_class: int = 150,
    n_test: int = 1000,
    seed: int = 0,
    jobs: int = 1,
) -> ToyBenchResult:
    """No-adaptation and adapted target accuracy, in percent, over seeded trials.

    Trial ``k`` uses generator seed ``seed + k`` at every angle.
    """
    angles = tuple(int(a) for a in angles)
    tasks = [(a, seed + k, per_class, n_test, cfg, classifier) for a in angles for k in range(trials)]
    out = np.array(_map(_toy_trial, tasks, jobs)).reshape(len(angles), trials, 2)
    return ToyBenchResult(angles, trials, classifier, out[..., 0], out[..., 1])


# ---------------------------------------------------------------- LP timings


@dataclass
class FlowBenchResult:
    sizes: tuple[int, ...]
    baseline_s: list[float]
    netsimplex_s: list[float]
    subproblems: list[int]

    @property
    def speedup(self) -> list[float]:
        return [b / n for b, n in zip(self.baseline_s, self.netsimplex_s)]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "baseline_s", "netsimplex_s", "speedup"])
            for row in zip(self.sizes, self.baseline_s, self.netsimplex_s, self.speedup):
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        return path


def collect_subproblems(per_class: int, angle: float = 50.0, seed: int = 0, cfg: AdaptationConfig | None = None) -> list[np.ndarray]:
    """Cost matrices of every LP solved by one round of adaptation on moons.

    The first is the Euclidean initialisation cost, the rest are the
    conditional-gradient linearisations in iteration order.
    """
    cfg = cfg or replace(TOY_CONFIG, cg=CgConfig(max_iters=FLOW_MAX_ITERS))
    src, tgt = generate_moons(MoonsSpec(per_class=per_class, rotation_deg=angle, seed=seed))
    ctx = ObjectiveContext(src.features, tgt.features, build_affinity(src, cfg.sigma_source).values,
                           build_affinity(tgt, cfg.sigma_target).values, src.labels, cfg.lambda_s, cfg.lambda_g)
    cross = build_cross_cost(src, tgt)
    costs = [cross]
    run_cg(ctx, cfg.cg, initialize_c0(cross), callback=lambda t, c, gap: costs.append(grad_f(ctx, c)))
    return costs


def time_subproblems(costs, solver: str) -> float:
    t0 = time.perf_counter()
    for g in costs:
        lp_subproblem(g, solver=solver)
    return time.perf_counter() - t0


def bench_flow(sizes=FLOW_SIZES, seed: int = 0, max_iters: int = FLOW_MAX_ITERS, baseline: str = "general_lp") -> FlowBenchResult:
    """Wall-clock seconds to solve one adaptation's LP sequence with each solver.

    Both solvers see identical cost matrices, gathered beforehand so that
    timing covers the LP solves only.
    """
    cfg = replace(TOY_CONFIG, cg=CgConfig(max_iters=max_iters))
    lp_subproblem(np.zeros((2, 2)))  # compile the network simplex kernel outside the timings
    base, ns, counts = [], [], []
    for n in sizes:
        costs = collect_subproblems(int(n), seed=seed, cfg=cfg)
        ns.append(time_subproblems(costs, "network_simplex"))
        base.append(time_subproblems(costs, baseline))
        counts.append(len(costs))
    return FlowBenchResult(tuple(int(n) for n in sizes), base, ns, counts)
