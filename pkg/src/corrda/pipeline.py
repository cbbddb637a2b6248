"""Alternating correspondence / mapping adaptation of a labelled source to a target."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .affinity import build_affinity, build_cross_cost
from .cg import CgConfig, CgTrace, initialize_c0, run_cg
from .classifiers import accuracy, make_classifier
from .data import SampleSet
from .mapping import DEFAULT_RIDGE, LinearMap, apply_mapping, fit_mapping
from .objective import ObjectiveContext, eval_f


@dataclass(frozen=True)
class AdaptationConfig:
    lambda_s: float = 0.0
    lambda_g: float = 0.0
    n_t_rounds: int = 1
    ridge: float = DEFAULT_RIDGE
    cg: CgConfig = field(default_factory=CgConfig)
    sigma_source: float | None = None
    sigma_target: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.lambda_s < 0 or self.lambda_g < 0:
            raise ValueError("lambda_s and lambda_g must be nonnegative")
        if self.n_t_rounds < 1:
            raise ValueError("n_t_rounds must be >= 1")
        if not self.ridge > 0:
            raise ValueError("ridge must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdaptationResult:
    adapted_source: SampleSet
    final_correspondence: np.ndarray
    traces: list[CgTrace]
    objective_by_round: list[float]
    initial_objective_by_round: list[float]
    maps: list[LinearMap]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def composite_map(self) -> LinearMap:
        """Single map equal to applying every round's map in order."""
        w = np.eye(self.adapted_source.d)
        for m in self.maps:
            w = w @ m.weights
        return LinearMap(w)


def adapt(source: SampleSet, target: SampleSet, cfg: AdaptationConfig | None = None) -> AdaptationResult:
    """Run ``cfg.n_t_rounds`` rounds of correspondence search and ridge mapping.

    Each round matches the current (mapped) source to the fixed target,
    starting the conditional-gradient solve from the Euclidean
    transportation vertex, then replaces the source features with their
    image under the fitted map. The target's labels, if any, are ignored.
    """
    cfg = cfg or AdaptationConfig()
    if not source.labelled:
        raise ValueError("the source sample set must be labelled")
    if source.d != target.d:
        raise ValueError(f"feature dimensions differ: {source.d} vs {target.d}")
    timings = {"affinity": 0.0, "init": 0.0, "cg": 0.0, "mapping": 0.0}

    t0 = time.perf_counter()
    dt = build_affinity(target, cfg.sigma_target)
    timings["affinity"] += time.perf_counter() - t0

    xs = source
    traces, objs, objs0, maps = [], [], [], []
    c_star = None
    for _ in range(cfg.n_t_rounds):
        t0 = time.perf_counter()
        ds = build_affinity(xs, cfg.sigma_source)
        ctx = ObjectiveContext(xs.features, target.features, ds.values, dt.values, xs.labels, cfg.lambda_s, cfg.lambda_g)
        t1 = time.perf_counter()
        c0 = initialize_c0(build_cross_cost(xs, target), solver=cfg.cg.solver)
        t2 = time.perf_counter()
        c_star, trace = run_cg(ctx, cfg.cg, c0)
        t3 = time.perf_counter()
        m = fit_mapping(xs, c_star @ target.features, cfg.ridge)
        objs0.append(eval_f(ctx, c0).total)
        objs.append(eval_f(ctx, c_star).total)
        xs = apply_mapping(m, xs)
        t4 = time.perf_counter()
        timings["affinity"] += t1 - t0
        timings["init"] += t2 - t1
        timings["cg"] += t3 - t2
        timings["mapping"] += t4 - t3
        traces.append(trace)
        maps.append(m)
    return AdaptationResult(xs, c_star, traces, objs, objs0, maps, timings)


def evaluate(train: SampleSet, test: SampleSet, classifier: str = "1nn", seed: int = 0) -> float:
    clf = make_classifier(classifier, seed=seed).fit(train.features, train.labels)
    return accuracy(clf.predict(test.features), test.labels)


def no_adaptation_baseline(source: SampleSet, target_test: SampleSet, classifier: str = "1nn", seed: int = 0) -> float:
    """Accuracy on ``target_test`` of a classifier trained on the raw source."""
    return evaluate(source, target_test, classifier, seed)
