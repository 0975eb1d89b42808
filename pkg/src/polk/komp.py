"""Destructive kernel orthogonal matching pursuit with pre-fitting.

Given a kernel expansion f~ and a budget eps, repeatedly remove the atom
whose removal (followed by a least-squares re-fit of the surviving weights
against the ORIGINAL f~) costs the least in Hilbert norm, stopping when the
cheapest removal would push the approximation error past eps.

Per pass the removal errors gamma_j for all remaining atoms are obtained
from one factorization of the active Gram block via the leave-one-out
identity gamma_j^2 = rho^2 + ||A_j||^2 / [K^-1]_jj, where A is the current
full re-fit and rho its residual. The winning removal is then confirmed with
an explicit re-fit so the reported error is exact rather than the fast-path
approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, UsageError
from .kernels import (
    Array,
    KernelExpansion,
    KernelSpec,
    gram,
    hilbert_norm,
    inv_psd,
    kernel_eval,
    kernel_vector,
    solve_psd,
)

# Stop-rule slack absorbing factorization jitter, so exact duplicates and
# zero-weight atoms still prune at eps = 0. Scaled by (1 + ||f~||_H).
_STOP_SLACK = 1e-9


@dataclass(frozen=True)
class PruneBudget:
    epsilon: float
    max_model_order: int | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise UsageError("approximation budget must be nonnegative")


@dataclass(frozen=True)
class PruneReport:
    removed_indices: tuple[int, ...]
    final_error: float
    passes: int


def refit_weights(
    kernel: KernelSpec,
    target_points: Array,
    target_weights: Array,
    fit_points: Array,
) -> Array:
    """Least-squares weights on fit_points approximating the target expansion.

    Solves K_DD W = K_{D,D~} W~ per output column; an empty fit dictionary
    yields empty weights (the zero function).
    """
    target_points = np.atleast_2d(np.asarray(target_points, dtype=np.float64))
    target_weights = np.asarray(target_weights, dtype=np.float64)
    fit_points = np.atleast_2d(np.asarray(fit_points, dtype=np.float64))
    if target_points.shape[0] == 0:
        raise UsageError("target expansion must have at least one atom")
    if fit_points.shape[0] == 0:
        return np.zeros((0, target_weights.shape[1]))
    K_dd = gram(kernel, fit_points, fit_points)
    rhs = gram(kernel, fit_points, target_points) @ target_weights
    return solve_psd(K_dd, rhs)


def _refit_subset(K_full: Array, W_full: Array, idx: Array) -> Array:
    """Re-fit against the original expansion on a subset of its own atoms."""
    if idx.size == 0:
        return np.zeros((0, W_full.shape[1]))
    return solve_psd(K_full[np.ix_(idx, idx)], K_full[idx, :] @ W_full)


def _subset_error(K_full: Array, W_full: Array, idx: Array, W_sub: Array) -> float:
    """||f~ - fit||_H when the fit lives on a subset of f~'s atoms.

    Embedding the fit into the original index set turns the three-Gram
    expansion into a single difference-weight quadratic form, which cancels
    exactly for exact re-fits instead of losing ~sqrt(eps) digits.
    """
    delta = -W_full.copy()
    if idx.size:
        delta[idx] += W_sub
    return float(np.sqrt(max(np.sum(delta * (K_full @ delta)), 0.0)))


def removal_error(kernel: KernelSpec, f_tilde: KernelExpansion, j: int) -> float:
    """Hilbert error of removing atom j (0-based) and re-fitting the rest."""
    M = f_tilde.model_order
    if not 0 <= j < M:
        raise UsageError(f"atom index {j} outside 0..{M - 1}")
    if M == 1:
        return hilbert_norm(f_tilde)
    K_full = gram(kernel, f_tilde.points, f_tilde.points)
    idx = np.delete(np.arange(M), j)
    W_sub = _refit_subset(K_full, f_tilde.weights, idx)
    return _subset_error(K_full, f_tilde.weights, idx, W_sub)


def _merge_exact_duplicates(points: Array, weights: Array) -> tuple[Array, Array, list[int]]:
    """Collapse atoms at bit-identical coordinates onto one representative.

    Removing a duplicated atom and re-fitting is exactly free (gamma = 0),
    so the pruning loop would shed these first at any eps >= 0; doing it in
    closed form keeps the Gram solves away from exactly singular systems.
    The loop's smallest-index tie-break removes earlier copies first, so the
    highest index of each group survives with the summed weight.
    """
    groups: dict[bytes, list[int]] = {}
    for i, row in enumerate(points):
        groups.setdefault(row.tobytes(), []).append(i)
    removed = sorted(
        i for idxs in groups.values() if len(idxs) > 1 for i in idxs[:-1]
    )
    if not removed:
        return points, weights, []
    merged = weights.copy()
    for idxs in groups.values():
        if len(idxs) > 1:
            merged[idxs[-1]] = weights[idxs].sum(axis=0)
    keep = np.setdiff1d(np.arange(points.shape[0]), removed)
    return points[keep], merged[keep], removed


def komp_prune(
    f_tilde: KernelExpansion, budget: PruneBudget
) -> tuple[KernelExpansion, PruneReport]:
    """Prune f~ down to the sparsest expansion within Hilbert distance eps.

    Ties in the per-pass argmin resolve to the smallest atom index, so the
    removal sequence is a deterministic function of the input.
    """
    M = f_tilde.model_order
    if budget.max_model_order is not None and M > budget.max_model_order:
        raise CapacityError(
            f"model order {M} exceeds cap {budget.max_model_order}"
        )
    if M == 0:
        return f_tilde, PruneReport((), 0.0, 0)

    points, start_weights, pre_removed = _merge_exact_duplicates(
        f_tilde.points, f_tilde.weights
    )
    K_full = gram(f_tilde.kernel, points, points)
    W_full = start_weights
    norm_sq = max(float(np.sum(W_full * (K_full @ W_full))), 0.0)
    slack = _STOP_SLACK * (1.0 + np.sqrt(norm_sq))

    survivors = np.setdiff1d(np.arange(M), pre_removed)
    active = np.arange(points.shape[0])
    weights = W_full.copy()
    removed: list[int] = list(pre_removed)
    final_error = 0.0

    while active.size > 0:
        K_aa = K_full[np.ix_(active, active)]
        B = K_full[active, :] @ W_full
        P = inv_psd(K_aa)
        A = P @ B
        rho_sq = max(norm_sq - float(np.sum(A * B)), 0.0)
        diag = np.maximum(P.diagonal(), np.finfo(np.float64).tiny)
        gamma_sq = rho_sq + np.sum(A * A, axis=1) / diag
        k = int(np.argmin(gamma_sq))

        idx = np.delete(active, k)
        W_sub = _refit_subset(K_full, W_full, idx)
        err = _subset_error(K_full, W_full, idx, W_sub)
        if err > budget.epsilon + slack:
            break
        removed.append(int(survivors[active[k]]))
        active = idx
        weights = W_sub
        final_error = err

    pruned = KernelExpansion(f_tilde.kernel, points[active], weights)
    return pruned, PruneReport(tuple(removed), final_error, len(removed))


def subspace_distance(kernel: KernelSpec, D: Array, x: Array) -> float:
    """Hilbert distance from kappa(x, .) to the span of the dictionary's
    kernel sections: || kappa(x,.) - v^T kappa_D(.) ||_H with v = K_DD^-1 kappa_D(x)."""
    D = np.atleast_2d(np.asarray(D, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64).ravel()
    kxx = kernel_eval(kernel, x, x)
    if D.shape[0] == 0:
        return float(np.sqrt(max(kxx, 0.0)))
    kx = kernel_vector(kernel, D, x)
    K = gram(kernel, D, D)
    v = solve_psd(K, kx)
    d_sq = kxx - 2.0 * float(kx @ v) + float(v @ K @ v)
    return float(np.sqrt(max(d_sq, 0.0)))
