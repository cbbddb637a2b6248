"""Sample sets, CSV I/O, normalisation, splits and the two-moons generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class SampleSet:
    """``n`` samples of ``d`` real features, optionally with class labels.

    Labels are integers in ``[0, class_count)`` and every class must be
    present. ``feature_names`` only matters for CSV round trips.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    class_count: int = 0
    feature_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError(f"features must be an n x d matrix with n, d >= 1; got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            r, c = np.argwhere(~np.isfinite(x))[0]
            raise DataError(f"non-finite feature value at sample {r}, feature {c}")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        if self.labels is None:
            object.__setattr__(self, "class_count", 0)
        else:
            y = np.array(self.labels)
            if y.shape != (x.shape[0],):
                raise DataError(f"labels shape {y.shape} does not match {x.shape[0]} samples")
            if y.size and not np.all(y == np.round(y)):
                raise DataError("labels must be integers")
            y = y.astype(np.int64)
            k = self.class_count or int(y.max()) + 1
            if y.min() < 0 or y.max() >= k:
                raise DataError(f"labels must lie in [0, {k})")
            missing = sorted(set(range(k)) - set(np.unique(y).tolist()))
            if missing:
                raise DataError(f"classes {missing} have no samples")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)
            object.__setattr__(self, "class_count", k)
        if self.feature_names is not None and len(self.feature_names) != x.shape[1]:
            raise DataError("feature_names length does not match feature count")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def labelled(self) -> bool:
        return self.labels is not None

    def with_features(self, features) -> "SampleSet":
        return SampleSet(features, self.labels, self.class_count, self.feature_names)

    def unlabelled(self) -> "SampleSet":
        return SampleSet(self.features, feature_names=self.feature_names)

    def subset(self, idx) -> "SampleSet":
        idx = np.asarray(idx, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return SampleSet(self.features[idx], labels, self.class_count, self.feature_names)


# ---------------------------------------------------------------- CSV


def load_csv(path, label_column: str | None = "label") -> SampleSet:
    """Read a header-first numeric CSV.

    ``label_column`` names the integer label column; if it is the default
    ``"label"`` and absent the file is read as unlabelled, while an
    explicitly named column that is absent is an error. Pass ``None`` to
    treat every column as a feature.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: file not found")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    label_idx = None
    if label_column is not None:
        if label_column in header:
            label_idx = header.index(label_column)
        elif label_column != "label":
            raise DataError(f"{path}: unknown label column {label_column!r}; columns are {header}")
    feat_cols = [c for c in range(len(header)) if c != label_idx]
    if not feat_cols:
        raise DataError(f"{path}: no feature columns")
    body = [r for r in rows[1:] if r]
    feats = np.empty((len(body), len(feat_cols)))
    labels = np.empty(len(body), dtype=np.int64) if label_idx is not None else None
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != len(header):
            raise DataError(f"{path}: line {line} has {len(row)} fields, header has {len(header)}")
        for out_c, c in enumerate(feat_cols):
            try:
                v = float(row[c])
            except ValueError:
                raise DataError(f"{path}: line {line}, column {header[c]!r}: non-numeric value {row[c]!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {line}, column {header[c]!r}: non-finite value {row[c]!r}")
            feats[r, out_c] = v
        if label_idx is not None:
            try:
                labels[r] = int(row[label_idx])
            except ValueError:
                raise DataError(
                    f"{path}: line {line}, column {header[label_idx]!r}: label {row[label_idx]!r} is not an integer"
                ) from None
    if not body:
        raise DataError(f"{path}: no data rows")
    names = tuple(header[c] for c in feat_cols)
    try:
        return SampleSet(feats, labels, feature_names=names)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def save_csv(s: SampleSet, path, label_column: str = "label", include_labels: bool = True) -> Path:
    """Write ``s`` with shortest round-trip float formatting."""
    path = Path(path)
    names = list(s.feature_names or [f"x{k}" for k in range(s.d)])
    write_labels = include_labels and s.labelled
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ([label_column] if write_labels else []))
        for r in range(s.n):
            row = [repr(float(v)) for v in s.features[r]]
            if write_labels:
                row.append(str(int(s.labels[r])))
            w.writerow(row)
    return path


def save_matrix_csv(matrix, path, prefix: str = "c") -> Path:
    """Write a numeric matrix with a generated header ``c0, c1, ...``."""
    matrix = np.asarray(matrix, dtype=np.float64)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}{k}" for k in range(matrix.shape[1])])
        for row in matrix:
            w.writerow([repr(float(v)) for v in row])
    return path


# ---------------------------------------------------------------- transforms


def zscore_normalize(s: SampleSet) -> SampleSet:
    """Standardise each column by its mean and population std (divide by n).

    Zero-variance columns are left unchanged.
    """
    if s.n < 2:
        raise DataError("z-scoring needs at least 2 samples")
    x = s.features
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    out = x.copy()
    keep = sd > 0
    out[:, keep] = (x[:, keep] - mu[keep]) / sd[keep]
    return s.with_features(out)


def _allocate(counts: np.ndarray, fraction: float, stratified: bool) -> np.ndarray:
    # Largest-remainder apportionment of round(fraction * n) over classes.
    exact = fraction * counts
    take = np.floor(exact).astype(np.int64)
    if stratified:
        take = np.clip(take, 1, counts - 1)
    short = int(round(fraction * counts.sum())) - int(take.sum())
    order = np.argsort(-(exact - np.floor(exact)), kind="stable")
    for c in order:
        if short <= 0:
            break
        if take[c] < counts[c] - (1 if stratified else 0):
            take[c] += 1
            short -= 1
    return take


def split_indices(s: SampleSet, fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays of a random (label-stratified if labelled) two-way split."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"split fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    if not s.labelled:
        perm = rng.permutation(s.n)
        k = int(round(fraction * s.n))
        return np.sort(perm[:k]), np.sort(perm[k:])
    counts = np.bincount(s.labels, minlength=s.class_count)
    small = np.flatnonzero(counts < 2)
    if small.size:
        raise DataError(f"classes {small.tolist()} have fewer than 2 samples; cannot stratify")
    take = _allocate(counts, fraction, stratified=True)
    first, second = [], []
    for c in range(s.class_count):
        idx = rng.permutation(np.flatnonzero(s.labels == c))
        first.append(idx[: take[c]])
        second.append(idx[take[c]:])
    return np.sort(np.concatenate(first)), np.sort(np.concatenate(second))


def split(s: SampleSet, fraction: float, seed: int = 0) -> tuple[SampleSet, SampleSet]:
    a, b = split_indices(s, fraction, seed)
    return s.subset(a), s.subset(b)


def stratified_folds(labels: np.ndarray, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Partition sample indices into ``folds`` label-stratified groups."""
    if folds < 2:
        raise DataError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    out = [[] for _ in range(folds)]
    offset = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        for pos, i in enumerate(idx):
            out[(pos + offset) % folds].append(i)
        offset += len(idx)
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in out]


# ---------------------------------------------------------------- two moons

MOONS_CENTROID = np.array([0.5, 0.25])  # population mean of both moons


@dataclass(frozen=True)
class MoonsSpec:
    per_class: int = 150
    rotation_deg: float = 0.0
    noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if not 0.0 <= self.rotation_deg <= 180.0:
            raise ValueError("rotation_deg must be in [0, 180]")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def rotation_matrix(deg: float) -> np.ndarray:
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def rotate(points: np.ndarray, deg: float, center=MOONS_CENTROID) -> np.ndarray:
    """Rotate row-vector points counter-clockwise by ``deg`` about ``center``."""
    center = np.asarray(center, dtype=np.float64)
    return (points - center) @ rotation_matrix(deg).T + center


def sample_moons(per_class: int, noise_std: float, rng: np.random.Generator) -> SampleSet:
    """Two interleaving unit half-circles; class 0 on top, class 1 shifted by (1, -0.5)."""
    t0 = rng.uniform(0.0, math.pi, per_class)
    t1 = rng.uniform(0.0, math.pi, per_class)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    x = np.vstack([upper, lower]) + rng.normal(0.0, noise_std, (2 * per_class, 2))
    y = np.repeat([0, 1], per_class)
    return SampleSet(x, y, 2, ("x0", "x1"))


def generate_moons(spec: MoonsSpec) -> tuple[SampleSet, SampleSet]:
    """Source draw and an independent target draw rotated by ``spec.rotation_deg``.

    The target keeps its labels for evaluation; adaptation code must only
    see :meth:`SampleSet.unlabelled`.
    """
    rng = np.random.default_rng(spec.seed)
    source = sample_moons(spec.per_class, spec.noise_std, rng)
    raw = sample_moons(spec.per_class, spec.noise_std, rng)
    return source, raw.with_features(rotate(raw.features, spec.rotation_deg))


def generate_moons_test(spec: MoonsSpec, n_test: int = 1000) -> SampleSet:
    """Held-out target-distribution sample of ``n_test`` points (even split by class)."""
    rng = np.random.default_rng([spec.seed, 1])
    raw = sample_moons(n_test // 2, spec.noise_std, rng)
    return raw.with_features(rotate(raw.features, spec.rotation_deg))
