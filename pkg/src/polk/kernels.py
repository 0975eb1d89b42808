"""Reproducing-kernel primitives and Hilbert-space geometry.

A classifier is represented as a kernel expansion f = (f_1..f_C) sharing one
dictionary of atoms: f_c(x) = sum_n W[n, c] * kappa(d_n, x). All inner
products, norms, and distances between expansions reduce to quadratic forms
in Gram matrices of the dictionaries involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import UsageError

Array = np.ndarray

# Base relative diagonal jitter for symmetric solves; escalated x10 on
# factorization failure up to _JITTER_MAX, then pseudo-inverse fallback.
_JITTER_BASE = 1e-10
_JITTER_MAX = 1e-6
_PINV_RCOND = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    gaussian:   kappa(x, x') = exp(-||x - x'||^2 / (2 * bandwidth_sq))
    polynomial: kappa(x, x') = (x . x' + offset) ** degree
    """

    family: str
    bandwidth_sq: float | None = None
    offset: float | None = None
    degree: int | None = None

    def __post_init__(self):
        if self.family == "gaussian":
            if self.bandwidth_sq is None or not self.bandwidth_sq > 0:
                raise UsageError("gaussian kernel requires bandwidth_sq > 0")
        elif self.family == "polynomial":
            if self.degree is None or int(self.degree) < 1:
                raise UsageError("polynomial kernel requires degree >= 1")
            if self.offset is None:
                raise UsageError("polynomial kernel requires an offset")
        else:
            raise UsageError(f"unknown kernel family: {self.family!r}")

    @staticmethod
    def gaussian(bandwidth_sq: float) -> "KernelSpec":
        return KernelSpec("gaussian", bandwidth_sq=float(bandwidth_sq))

    @staticmethod
    def polynomial(offset: float, degree: int) -> "KernelSpec":
        return KernelSpec("polynomial", offset=float(offset), degree=int(degree))


def _freeze(a: Array) -> Array:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dictionary:
    """A set of M atoms in R^p, stored one atom per row."""

    points: Array  # (M, p)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
        if not np.all(np.isfinite(pts)):
            raise UsageError("dictionary atoms must be finite")
        object.__setattr__(self, "points", _freeze(pts))

    @property
    def model_order(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class KernelExpansion:
    """A vector-valued RKHS function: dictionary (M, p) plus weights (M, C).

    M = 0 represents the zero function exactly.
    """

    kernel: KernelSpec
    points: Array   # (M, p)
    weights: Array  # (M, C)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        wts = np.asarray(self.weights, dtype=np.float64)
        if pts.ndim != 2 or wts.ndim != 2:
            raise UsageError("points must be (M, p) and weights (M, C)")
        if pts.shape[0] != wts.shape[0]:
            raise UsageError(
                f"weight rows ({wts.shape[0]}) must match atom count ({pts.shape[0]})"
            )
        if wts.shape[1] < 1:
            raise UsageError("expansion needs at least one output column")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wts))):
            raise UsageError("expansion parameters must be finite")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(wts))

    @classmethod
    def zero(cls, kernel: KernelSpec, dim: int, num_classes: int) -> "KernelExpansion":
        return cls(kernel, np.zeros((0, dim)), np.zeros((0, num_classes)))

    @property
    def model_order(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class GramBundle:
    """Gram matrix of a dictionary, optionally with a cross matrix, plus the
    diagonal jitter a factorization of K_DD would start from."""

    K_DD: Array
    K_DE: Array | None = None
    jitter: float = 0.0


def _check_same_dim(a: Array, b: Array) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise UsageError(f"feature dimensions differ: {a.shape[-1]} vs {b.shape[-1]}")


def _atoms(D) -> Array:
    return D.points if isinstance(D, Dictionary) else np.asarray(D, dtype=np.float64)


def kernel_eval(kernel: KernelSpec, x: Array, x2: Array) -> float:
    """Evaluate kappa(x, x') for two feature vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    _check_same_dim(x, x2)
    if kernel.family == "gaussian":
        d2 = float(np.sum((x - x2) ** 2))
        return float(np.exp(-d2 / (2.0 * kernel.bandwidth_sq)))
    return float((np.dot(x, x2) + kernel.offset) ** kernel.degree)


def gram(kernel: KernelSpec, A, B) -> Array:
    """Cross Gram matrix with entries kappa(A[i], B[j]); accepts Dictionary
    objects or plain (M, p) arrays of atoms."""
    A = np.atleast_2d(_atoms(A))
    B = np.atleast_2d(_atoms(B))
    if A.shape[0] and B.shape[0]:
        _check_same_dim(A, B)
    if kernel.family == "gaussian":
        aa = np.sum(A * A, axis=1)[:, None]
        bb = np.sum(B * B, axis=1)[None, :]
        d2 = np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)
        return np.exp(-d2 / (2.0 * kernel.bandwidth_sq))
    return (A @ B.T + kernel.offset) ** kernel.degree


def gram_bundle(kernel: KernelSpec, D: Array, E: Array | None = None) -> GramBundle:
    K = gram(kernel, D, D)
    jitter = _JITTER_BASE * float(K.diagonal().max()) if K.shape[0] else 0.0
    K_DE = gram(kernel, D, E) if E is not None else None
    return GramBundle(K_DD=K, K_DE=K_DE, jitter=jitter)


def kernel_vector(kernel: KernelSpec, D, x: Array) -> Array:
    """Vector of kernel evaluations (kappa(d_1, x), ..., kappa(d_M, x))."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return gram(kernel, np.atleast_2d(_atoms(D)), x[None, :])[:, 0]


def solve_psd(K: Array, B: Array) -> Array:
    """Solve K X = B for symmetric PSD K.

    Uses a Cholesky factorization with relative diagonal jitter, escalating
    the jitter tenfold on failure; falls back to a pseudo-inverse when the
    matrix is numerically rank deficient beyond that.
    """
    K = np.asarray(K, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if K.shape[0] == 0:
        return np.zeros_like(B)
    scale = float(K.diagonal().max())
    if scale <= 0.0:
        scale = 1.0
    jitter = _JITTER_BASE
    eye = np.eye(K.shape[0])
    while jitter <= _JITTER_MAX:
        try:
            c = cho_factor(K + (jitter * scale) * eye, lower=True, check_finite=False)
            return cho_solve(c, B, check_finite=False)
        except LinAlgError:
            jitter *= 10.0
    return np.linalg.pinv(K, rcond=_PINV_RCOND) @ B


def inv_psd(K: Array) -> Array:
    """Inverse of a symmetric PSD matrix via the jittered solve."""
    if K.shape[0] == 0:
        return np.zeros_like(K)
    return solve_psd(K, np.eye(K.shape[0]))


def evaluate(f: KernelExpansion, x: Array) -> Array:
    """Evaluate the expansion at x, returning the length-C score vector."""
    if f.model_order == 0:
        return np.zeros(f.num_classes)
    return f.weights.T @ kernel_vector(f.kernel, f.points, x)


def evaluate_batch(f: KernelExpansion, X: Array) -> Array:
    """Evaluate the expansion at N points at once, returning (N, C) scores."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if f.model_order == 0:
        return np.zeros((X.shape[0], f.num_classes))
    return gram(f.kernel, X, f.points) @ f.weights


def _check_compatible(f: KernelExpansion, g: KernelExpansion) -> None:
    if f.kernel != g.kernel:
        raise UsageError("expansions use different kernels")
    if f.num_classes != g.num_classes:
        raise UsageError("expansions have different numbers of outputs")


def hilbert_inner(f: KernelExpansion, g: KernelExpansion) -> float:
    """Joint Hilbert inner product: sum over classes of w_f^T K_{Df,Dg} w_g."""
    _check_compatible(f, g)
    if f.model_order == 0 or g.model_order == 0:
        return 0.0
    K = gram(f.kernel, f.points, g.points)
    return float(np.sum(f.weights * (K @ g.weights)))


def hilbert_norm(f: KernelExpansion) -> float:
    """sqrt(trace(W^T K_DD W)); zero iff the expansion is the zero function."""
    return float(np.sqrt(max(hilbert_inner(f, f), 0.0)))


def expansion_distance(f: KernelExpansion, g: KernelExpansion) -> float:
    """Hilbert distance ||f - g||_H via the stacked-dictionary quadratic form.

    Stacking atoms of f and g with weights [W_f; -W_g] turns the three-Gram
    expansion of the squared distance into a single PSD quadratic form.
    """
    _check_compatible(f, g)
    if f.model_order == 0:
        return hilbert_norm(g)
    if g.model_order == 0:
        return hilbert_norm(f)
    _check_same_dim(f.points, g.points)
    U = np.vstack([f.points, g.points])
    w = np.vstack([f.weights, -g.weights])
    G = gram(f.kernel, U, U)
    return float(np.sqrt(max(np.sum(w * (G @ w)), 0.0)))
