import numpy as np
import pytest

from polk.data import Dataset
from polk.kernels import KernelExpansion, KernelSpec


@pytest.fixture
def gaussian():
    return KernelSpec.gaussian(0.5)


def random_expansion(rng, kernel, M, p, C, weight_scale=1.0, spread=2.0):
    """Random expansion with atoms spread out and weights bounded away from 0."""
    pts = spread * rng.standard_normal((M, p))
    w = weight_scale * (rng.uniform(0.2, 1.0, (M, C)) * rng.choice([-1.0, 1.0], (M, C)))
    return KernelExpansion(kernel, pts, w)


def two_blobs(seed=0, n=200, sep=1.6, spread=0.45):
    """Binary-labeled planar blob pair, labels in {0, 1}."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([
        rng.normal([-sep / 2, 0.0], spread, (half, 2)),
        rng.normal([+sep / 2, 0.0], spread, (n - half, 2)),
    ])
    y = np.r_[np.zeros(half, dtype=int), np.ones(n - half, dtype=int)]
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], 1)
