"""Synthetic benchmark generation and dataset file formats.

The ``multidist`` benchmark draws planar features from a fixed Gaussian
mixture: class anchors sit equitably spaced on the unit circle, each class
owns J mode centers scattered around its anchor, and every sample picks a
uniform class, a uniform mode, and adds isotropic noise.

Two text formats are supported: dense CSV rows ``label,v1,...,vp`` and
sparse rows ``label idx:val idx:val ...`` with 1-based strictly increasing
indices. Both accept LF or CRLF line endings and '#' comment lines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, UsageError

Array = np.ndarray


@dataclass(frozen=True)
class Dataset:
    """Labeled feature matrix; labels live in {1..C} (or {0,1} for binary tasks)."""

    features: Array  # (N, p)
    labels: Array    # (N,)
    num_classes: int

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.int64).ravel()
        if X.shape[0] != y.shape[0]:
            raise UsageError("feature rows and label count differ")
        if not np.all(np.isfinite(X)):
            raise UsageError("features must be finite")
        if y.size and (y.min() < 0 or y.max() > self.num_classes):
            raise UsageError("labels outside the declared alphabet")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MultidistSpec:
    """Mixture parameters. Class anchors sit on the unit circle; each class
    gets ``modes_per_class`` centers scattered N(anchor, scatter * I), and
    samples add N(0, within * I) noise around a uniformly chosen center.

    Center sets whose closest cross-class pair falls under
    ``min_mode_separation`` are redrawn (up to ``max_center_draws`` blocks,
    then the best-separated block wins), keeping the class modes of a
    typical realization distinguishable at the default noise level.
    """

    num_classes: int = 5
    modes_per_class: int = 3
    within_mode_var: float = 0.04
    mean_scatter_var: float = 1.0
    n_train: int = 5000
    n_test: int = 2500
    seed: int = 0
    min_mode_separation: float = 0.8
    max_center_draws: int = 1000

    def __post_init__(self):
        if self.num_classes < 2:
            raise UsageError("multidist needs at least two classes")
        if self.within_mode_var <= 0 or self.mean_scatter_var <= 0:
            raise UsageError("variances must be positive")
        if self.min_mode_separation < 0:
            raise UsageError("mode separation must be nonnegative")


def _draw_centers(spec: MultidistSpec, anchors: Array, rng) -> Array:
    C, J = spec.num_classes, spec.modes_per_class
    scale = np.sqrt(spec.mean_scatter_var)
    cls = np.repeat(np.arange(C), J)
    cross = cls[:, None] != cls[None, :]
    best, best_sep = None, -np.inf
    for _ in range(max(spec.max_center_draws, 1)):
        centers = anchors[:, None, :] + scale * rng.standard_normal((C, J, 2))
        flat = centers.reshape(-1, 2)
        sep = float(
            np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)[cross].min()
        )
        if sep >= spec.min_mode_separation:
            return centers
        if sep > best_sep:
            best, best_sep = centers, sep
    return best


def gen_multidist(spec: MultidistSpec) -> tuple[Dataset, Dataset]:
    """Generate (train, test) splits sharing one realization of the mixture.

    Draw order, fixed for reproducibility: candidate center blocks as
    (C, J, 2) normals until one clears the separation margin, then per split
    the label vector, the mode picks, and the sample noise, train before
    test.
    """
    rng = np.random.default_rng(spec.seed)
    C, J = spec.num_classes, spec.modes_per_class
    angles = 2.0 * np.pi * np.arange(C) / C
    anchors = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (C, 2)
    centers = _draw_centers(spec, anchors, rng)

    def draw(n: int) -> Dataset:
        ys = rng.integers(1, C + 1, size=n)
        js = rng.integers(0, J, size=n)
        x = centers[ys - 1, js] + np.sqrt(spec.within_mode_var) * rng.standard_normal(
            (n, 2)
        )
        return Dataset(x, ys, C)

    return draw(spec.n_train), draw(spec.n_test)


def stream_batches(data: Dataset, batch_size: int, passes: int = 1,
                   seed: int | None = None, shuffle: bool = True):
    """Yield (X, y) mini-batches; each pass uses a fresh seeded permutation."""
    if batch_size < 1:
        raise UsageError("batch size must be positive")
    rng = np.random.default_rng(seed)
    n = len(data)
    for _ in range(passes):
        order = rng.permutation(n) if shuffle else np.arange(n)
        for start in range(0, n, batch_size):
            sel = order[start:start + batch_size]
            yield data.features[sel], data.labels[sel]


def _data_lines(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_dense_csv(path) -> Dataset:
    """Load rows of ``label,v1,...,vp``; C is inferred as the maximum label."""
    rows, labels = [], []
    dim = None
    for lineno, line in _data_lines(path):
        parts = line.split(",")
        try:
            label = int(parts[0])
            values = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", path, lineno) from None
        if label < 0:
            raise ParseError(f"label must be >= 0, got {label}", path, lineno)
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise ParseError("row has no feature values", path, lineno)
        elif len(values) != dim:
            raise ParseError(
                f"ragged row: expected {dim} values, got {len(values)}", path, lineno
            )
        labels.append(label)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", path)
    y = np.asarray(labels, dtype=np.int64)
    return Dataset(np.asarray(rows), y, int(y.max()))


def write_dense_csv(path, data: Dataset) -> None:
    """Write dense CSV with 17-significant-digit floats (exact round-trip)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, row in zip(data.labels, data.features):
            fh.write("%d,%s\n" % (label, ",".join("%.17g" % v for v in row)))


def load_sparse_text(path, dim: int) -> Dataset:
    """Load sparse rows ``label idx:val ...``; unmentioned coordinates are 0."""
    if dim < 1:
        raise UsageError("feature dimension must be positive")
    rows, labels = [], []
    for lineno, line in _data_lines(path):
        parts = line.split()
        try:
            label = int(parts[0])
        except ValueError:
            raise ParseError(f"bad label field {parts[0]!r}", path, lineno) from None
        if label < 0:
            raise ParseError(f"label must be >= 0, got {label}", path, lineno)
        row = np.zeros(dim)
        prev = 0
        for tok in parts[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise ParseError(f"bad idx:val token {tok!r}", path, lineno) from None
            if not 1 <= idx <= dim:
                raise ParseError(f"index {idx} outside 1..{dim}", path, lineno)
            if idx <= prev:
                raise ParseError(
                    f"indices must be strictly increasing ({idx} after {prev})",
                    path, lineno,
                )
            row[idx - 1] = val
            prev = idx
        labels.append(label)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows", path)
    y = np.asarray(labels, dtype=np.int64)
    return Dataset(np.asarray(rows), y, int(y.max()))


def write_sparse_text(path, data: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, row in zip(data.labels, data.features):
            toks = ["%d" % label]
            toks += ["%d:%.17g" % (i + 1, v) for i, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(toks) + "\n")
