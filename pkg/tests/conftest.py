import sys

import numpy as np
import pytest

from corrda.data import SampleSet


def sinkhorn_feasible(rng, n_s, n_t, iters=5000, sparsity=0.0):
    """Random correspondence: positive matrix rescaled to rows 1, columns n_s / n_t."""
    k = rng.random((n_s, n_t)) + 1e-3
    if sparsity:
        k[rng.random((n_s, n_t)) < sparsity] = 1e-9
    col = n_s / n_t
    for _ in range(iters):
        k /= k.sum(axis=1, keepdims=True)
        k *= col / k.sum(axis=0, keepdims=True)
        if np.abs(k.sum(axis=1) - 1).max() < 1e-13:
            break
    return k


def random_labelled(rng, n, d, classes=2):
    y = np.arange(n) % classes
    return SampleSet(rng.normal(size=(n, d)), y, classes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
