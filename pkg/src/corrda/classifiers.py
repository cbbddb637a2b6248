"""Evaluation classifiers: 1-nearest-neighbour and a binary RBF-kernel SVM."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import SVC

from .data import SampleSet, stratified_folds

SVM_TOL = 1e-3
SVM_MAX_ITER = 100_000
DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)


class SvmConvergenceError(RuntimeError):
    """SMO did not reach the KKT tolerance within its iteration cap."""


def _xy(data, labels=None):
    if isinstance(data, SampleSet):
        return data.features, (data.labels if labels is None else labels)
    return np.asarray(data, dtype=np.float64), labels


def accuracy(pred, truth) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(truth)))


# ---------------------------------------------------------------- 1-NN


@dataclass(frozen=True)
class NnModel:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.features) == 0:
            raise ValueError("nearest-neighbour model needs at least one training sample")
        if len(self.labels) != len(self.features):
            raise ValueError("one label per training sample required")


def knn_fit(data, labels=None) -> NnModel:
    x, y = _xy(data, labels)
    if y is None:
        raise ValueError("training data must be labelled")
    return NnModel(np.asarray(x, dtype=np.float64), np.asarray(y))


def knn_predict(model: NnModel, queries, chunk: int = 2048) -> np.ndarray:
    """Label of the nearest training sample; ties go to the lowest training index."""
    q, _ = _xy(queries)
    if q.shape[1] != model.features.shape[1]:
        raise ValueError("query dimension does not match the model")
    out = np.empty(q.shape[0], dtype=model.labels.dtype)
    for lo in range(0, q.shape[0], chunk):
        dist = cdist(q[lo:lo + chunk], model.features, "sqeuclidean")
        out[lo:lo + chunk] = model.labels[np.argmin(dist, axis=1)]
    return out


# ---------------------------------------------------------------- SVM


@dataclass(frozen=True)
class SvmModel:
    """Binary soft-margin SVM; ``coef`` holds ``alpha_i * y_i`` with ``y = +1`` for ``classes[1]``."""

    coef: np.ndarray
    support_vectors: np.ndarray
    bias: float
    kernel_gamma: float
    penalty_c: float
    classes: tuple[int, int]

    def decision_function(self, x) -> np.ndarray:
        x, _ = _xy(x)
        k = np.exp(-self.kernel_gamma * cdist(x, self.support_vectors, "sqeuclidean"))
        return k @ self.coef + self.bias

    def predict(self, x) -> np.ndarray:
        f = self.decision_function(x)
        return np.where(f > 0, self.classes[1], self.classes[0])


def default_gamma_grid(x) -> list[float]:
    x, _ = _xy(x)
    var = float(x.var())
    base = 1.0 / (x.shape[1] * var) if var > 0 else 1.0
    return [base * 2.0**k for k in range(-4, 5)]


def svm_train(data, gamma: float, c: float, labels=None) -> SvmModel:
    """Fit by libsvm's SMO solver (tolerance 1e-3, at most 1e5 iterations)."""
    x, y = _xy(data, labels)
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError(f"binary SVM needs exactly 2 classes, got {classes.size}")
    if not (gamma > 0 and c > 0):
        raise ValueError("gamma and C must be positive")
    clf = SVC(C=c, kernel="rbf", gamma=gamma, tol=SVM_TOL, max_iter=SVM_MAX_ITER)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        try:
            clf.fit(x, y)
        except ConvergenceWarning as exc:
            raise SvmConvergenceError(str(exc)) from None
    return SvmModel(
        coef=clf.dual_coef_[0].copy(),
        support_vectors=clf.support_vectors_.copy(),
        bias=float(clf.intercept_[0]),
        kernel_gamma=float(gamma),
        penalty_c=float(c),
        classes=(int(classes[0]), int(classes[1])),
    )


def svm_cv_scores(data, gamma_grid, c_grid, folds: int = 5, seed: int = 0, labels=None) -> dict:
    """Mean validation accuracy per ``(gamma, C)`` over stratified folds."""
    x, y = _xy(data, labels)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    parts = stratified_folds(y, folds, seed)
    scores = {}
    for g, c in product(gamma_grid, c_grid):
        accs = []
        for k in range(folds):
            val = parts[k]
            tr = np.concatenate([parts[i] for i in range(folds) if i != k])
            model = svm_train(x[tr], g, c, labels=y[tr])
            accs.append(accuracy(model.predict(x[val]), y[val]))
        scores[(g, c)] = float(np.mean(accs))
    return scores


def svm_cv_select(data, gamma_grid=None, c_grid=DEFAULT_C_GRID, folds: int = 5, seed: int = 0, labels=None):
    """Grid point with the best CV accuracy; ties go to the smallest ``(gamma, C)``."""
    x, y = _xy(data, labels)
    gamma_grid = default_gamma_grid(x) if gamma_grid is None else list(gamma_grid)
    if not gamma_grid or not c_grid:
        raise ValueError("grids must be non-empty")
    scores = svm_cv_scores(x, gamma_grid, c_grid, folds, seed, labels=y)
    best = None
    for key in sorted(scores):
        if best is None or scores[key] > scores[best]:
            best = key
    return best


# ---------------------------------------------------------------- uniform interface


class NearestNeighbor:
    name = "1nn"

    def fit(self, x, y):
        self.model_ = knn_fit(x, y)
        return self

    def predict(self, x):
        return knn_predict(self.model_, x)


class CvSvm:
    """RBF SVM whose ``(gamma, C)`` is picked by stratified k-fold CV at fit time."""

    name = "svm"

    def __init__(self, gamma_grid=None, c_grid=DEFAULT_C_GRID, folds: int = 5, seed: int = 0):
        self.gamma_grid = gamma_grid
        self.c_grid = c_grid
        self.folds = folds
        self.seed = seed

    def fit(self, x, y):
        x, y = np.asarray(x, dtype=np.float64), np.asarray(y)
        self.params_ = svm_cv_select(x, self.gamma_grid, self.c_grid, self.folds, self.seed, labels=y)
        self.model_ = svm_train(x, *self.params_, labels=y)
        return self

    def predict(self, x):
        return self.model_.predict(x)


def make_classifier(name: str, seed: int = 0):
    if name == "1nn":
        return NearestNeighbor()
    if name == "svm":
        return CvSvm(seed=seed)
    raise ValueError(f"unknown classifier {name!r}; expected '1nn' or 'svm'")
