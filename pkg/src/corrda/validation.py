"""Hyperparameter search over (lambda_s, lambda_g): reverse validation and a labelled oracle."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path

import numpy as np

from .classifiers import accuracy, make_classifier
from .data import SampleSet, stratified_folds
from .mapping import apply_mapping
from .pipeline import AdaptationConfig, adapt

DEFAULT_GRID_VALUES = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class GridSpec:
    lambda_s_values: tuple[float, ...] = DEFAULT_GRID_VALUES
    lambda_g_values: tuple[float, ...] = DEFAULT_GRID_VALUES

    def __post_init__(self):
        for name in ("lambda_s_values", "lambda_g_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if any(not np.isfinite(v) or v < 0 for v in vals):
                raise ValueError(f"{name} must hold finite nonnegative values")
            object.__setattr__(self, name, vals)

    @classmethod
    def single(cls, lambda_s: float, lambda_g: float) -> "GridSpec":
        return cls((lambda_s,), (lambda_g,))

    def points(self) -> list[tuple[float, float]]:
        """Grid points with ``lambda_s`` varying slowest."""
        return list(product(self.lambda_s_values, self.lambda_g_values))


def _argmax_point(points, scores) -> tuple[float, float]:
    # Largest score; among equal scores the lexicographically smallest point.
    order = sorted(range(len(points)), key=lambda i: points[i])
    best = order[0]
    for i in order[1:]:
        if scores[i] > scores[best]:
            best = i
    return points[best]


@dataclass(frozen=True)
class RvReport:
    points: list[tuple[float, float]]
    fold_accuracies: np.ndarray  # (n_points, folds)
    selected: tuple[float, float]
    folds: int

    @property
    def mean_accuracy(self) -> np.ndarray:
        return self.fold_accuracies.mean(axis=1)

    def mean_for(self, point) -> float:
        return float(self.mean_accuracy[self.points.index(tuple(point))])

    def to_csv(self, path) -> Path:
        path = Path(path)
        means = self.mean_accuracy
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda_s", "lambda_g", "fold", "accuracy", "mean_accuracy", "selected"])
            for i, (ls, lg) in enumerate(self.points):
                sel = int((ls, lg) == self.selected)
                for k in range(self.folds):
                    w.writerow([repr(ls), repr(lg), k, repr(float(self.fold_accuracies[i, k])), repr(float(means[i])), sel])
        return path


@dataclass(frozen=True)
class OracleReport:
    grid: GridSpec
    accuracies: np.ndarray  # (n_points,), in grid.points() order
    selected: tuple[float, float]

    @property
    def points(self) -> list[tuple[float, float]]:
        return self.grid.points()

    @property
    def surface(self) -> np.ndarray:
        """Accuracies as a ``len(lambda_s) x len(lambda_g)`` array."""
        return self.accuracies.reshape(len(self.grid.lambda_s_values), len(self.grid.lambda_g_values))

    def accuracy_for(self, point) -> float:
        return float(self.accuracies[self.points.index(tuple(point))])

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda_s", "lambda_g", "accuracy", "selected"])
            for (ls, lg), a in zip(self.points, self.accuracies):
                w.writerow([repr(ls), repr(lg), repr(float(a)), int((ls, lg) == self.selected)])
        return path


def _fit_predict(name, seed, x_train, y_train, x_test):
    classes = np.unique(y_train)
    if classes.size == 1:
        # Pseudo-labels can collapse to one class; every prediction is then that class.
        return np.full(len(x_test), classes[0])
    clf = make_classifier(name, seed=seed).fit(x_train, y_train)
    return clf.predict(x_test)


def _rv_job(args) -> float:
    source, held_out, target, cfg, classifier, map_held_out = args
    res = adapt(source, target, cfg)
    pseudo = _fit_predict(classifier, cfg.seed, res.adapted_source.features, res.adapted_source.labels, target.features)
    held = apply_mapping(res.composite_map, held_out) if map_held_out else held_out
    pred = _fit_predict(classifier, cfg.seed, target.features, pseudo, held.features)
    return accuracy(pred, held.labels)


def _oracle_job(args) -> float:
    source, target, evaluation, cfg, classifier = args
    res = adapt(source, target, cfg)
    pred = _fit_predict(classifier, cfg.seed, res.adapted_source.features, res.adapted_source.labels, evaluation.features)
    return accuracy(pred, evaluation.labels)


def _run(fn, jobs_args, jobs: int) -> list[float]:
    if jobs <= 1 or len(jobs_args) <= 1:
        return [fn(a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map() yields in submission order, so the merge is deterministic.
        return list(pool.map(fn, jobs_args))


def reverse_validate(
    source: SampleSet,
    target: SampleSet,
    grid: GridSpec | None = None,
    folds: int = 5,
    base_cfg: AdaptationConfig | None = None,
    classifier: str = "1nn",
    map_held_out: bool = True,
    jobs: int = 1,
) -> RvReport:
    """Select ``(lambda_s, lambda_g)`` without target labels.

    For every grid point and source fold: adapt the remaining source folds
    to the target, label the target with a classifier trained on the
    adapted source, train a second classifier on the pseudo-labelled target
    and score it on the held-out source fold. With ``map_held_out`` the fold
    is first passed through the fitted map(s); otherwise it is scored raw.
    Any labels carried by ``target`` are dropped on entry.
    """
    if not source.labelled:
        raise ValueError("the source sample set must be labelled")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    grid = grid or GridSpec()
    base_cfg = base_cfg or AdaptationConfig()
    target = target.unlabelled()
    parts = stratified_folds(source.labels, folds, seed=base_cfg.seed)
    splits = []
    for k in range(folds):
        train = np.sort(np.concatenate([parts[i] for i in range(folds) if i != k]))
        splits.append((source.subset(train), source.subset(np.sort(parts[k]))))
    points = grid.points()
    tasks = [
        (tr, held, target, replace(base_cfg, lambda_s=ls, lambda_g=lg), classifier, map_held_out)
        for ls, lg in points
        for tr, held in splits
    ]
    accs = np.array(_run(_rv_job, tasks, jobs)).reshape(len(points), folds)
    selected = _argmax_point(points, accs.mean(axis=1))
    return RvReport(points, accs, selected, folds)


def grid_best_oracle(
    source: SampleSet,
    target: SampleSet,
    evaluation: SampleSet,
    grid: GridSpec | None = None,
    base_cfg: AdaptationConfig | None = None,
    classifier: str = "1nn",
    jobs: int = 1,
) -> OracleReport:
    """Exhaustive sweep scored by true accuracy on the labelled ``evaluation`` set.

    Benchmark use only. Adaptation itself still sees ``target`` unlabelled.
    """
    if not evaluation.labelled:
        raise ValueError("the evaluation set must be labelled")
    grid = grid or GridSpec()
    base_cfg = base_cfg or AdaptationConfig()
    target = target.unlabelled()
    points = grid.points()
    tasks = [(source, target, evaluation, replace(base_cfg, lambda_s=ls, lambda_g=lg), classifier) for ls, lg in points]
    accs = np.array(_run(_oracle_job, tasks, jobs))
    return OracleReport(grid, accs, _argmax_point(points, accs))
