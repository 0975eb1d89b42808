"""Runtime monitors for the training loop's provable quantities.

A probe attached to a run records, per step, the sparsification bias
||f~ - f||_H / eta (which the pruning budget bounds by eps/eta), the iterate
norm (bounded by C*X/lambda when eta < 1/lambda), and the squared norm of
the projected gradient (whose running mean estimates the gradient's second
moment). The neighborhood radius of the constant-step regime combines that
estimate with the parsimony constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelExpansion, KernelSpec, expansion_distance
from .losses import LossKind, grad_norm_bound

_REL_SLACK = 1e-8


@dataclass(frozen=True)
class ProbeRecord:
    t: int
    eta: float
    epsilon: float
    bias: float
    iterate_norm: float
    grad_norm_sq: float
    dist_to_ref: float = float("nan")


@dataclass(frozen=True)
class CheckResult:
    status: str  # "pass" | "fail" | "n/a"
    slack: float

    @property
    def passed(self) -> bool:
        return self.status != "fail"


@dataclass
class TheoryProbe:
    """Collects per-step records for one trainer; loss constant and kernel
    bound are fixed by the configuration (the polynomial kernel bound is a
    running maximum over the observed stream)."""

    loss: LossKind
    kernel: KernelSpec
    lam: float
    reference: KernelExpansion | None = None
    lipschitz_C: float = field(init=False)
    kernel_bound_X: float = field(init=False)
    records: list[ProbeRecord] = field(default_factory=list)

    def __post_init__(self):
        self.lipschitz_C = grad_norm_bound(self.loss)
        self.kernel_bound_X = 1.0 if self.kernel.family == "gaussian" else 0.0

    def observe(self, t, eta, epsilon, bias, iterate_norm, grad_norm_sq, f=None):
        dist = float("nan")
        if self.reference is not None and f is not None:
            dist = expansion_distance(f, self.reference)
        self.records.append(
            ProbeRecord(t, eta, epsilon, bias, iterate_norm, grad_norm_sq, dist)
        )


def bias_check(record: ProbeRecord) -> CheckResult:
    """Projection bias against its budget bound: bias <= eps/eta (with slack)."""
    bound = record.epsilon / record.eta
    slack = bound + _REL_SLACK * (1.0 + bound) - record.bias
    return CheckResult("pass" if slack >= 0 else "fail", slack)


def norm_bound_check(record: ProbeRecord, probe: TheoryProbe) -> CheckResult:
    """Iterate norm against C*X/lambda; not applicable when lambda = 0."""
    if probe.lam == 0:
        return CheckResult("n/a", float("nan"))
    bound = probe.lipschitz_C * probe.kernel_bound_X / probe.lam
    slack = bound * (1.0 + _REL_SLACK) - record.iterate_norm
    return CheckResult("pass" if slack >= 0 else "fail", slack)


def variance_estimate(records) -> float:
    """Mean squared Hilbert norm of the projected gradients seen so far."""
    if len(records) < 2:
        raise ValueError("need at least two records for a variance estimate")
    return float(np.mean([r.grad_norm_sq for r in records]))


def neighborhood_radius(eta: float, lam: float, K: float, sigma_sq: float) -> float:
    """Constant-step convergence radius (sqrt(eta)/lambda)(K + sqrt(K^2 + lambda*sigma^2))."""
    return (np.sqrt(eta) / lam) * (K + np.sqrt(K * K + lam * sigma_sq))


def neighborhood_report(records, probe: TheoryProbe, K: float,
                        window_fraction: float = 0.2) -> tuple[float, float]:
    """Radius from the variance estimate plus the observed liminf proxy: the
    smallest distance to the reference over the trailing window of steps.
    The proxy is NaN when no reference expansion was attached."""
    etas = {r.eta for r in records}
    if len(etas) != 1:
        raise ValueError("neighborhood radius is defined for constant schedules")
    sigma_sq = variance_estimate(records)
    delta = neighborhood_radius(etas.pop(), probe.lam, K, sigma_sq)
    tail = records[int(np.floor(len(records) * (1.0 - window_fraction))):]
    dists = [r.dist_to_ref for r in tail if np.isfinite(r.dist_to_ref)]
    proxy = float(min(dists)) if dists else float("nan")
    return float(delta), proxy


def summarize(probe: TheoryProbe) -> dict:
    """Pass/fail counts over a whole run, for the diagnostics CLI."""
    bias_failures = sum(not bias_check(r).passed for r in probe.records)
    norm_failures = 0
    norm_applicable = probe.lam > 0
    if norm_applicable:
        norm_failures = sum(
            not norm_bound_check(r, probe).passed for r in probe.records
        )
    sigma_sq = variance_estimate(probe.records) if len(probe.records) >= 2 else float("nan")
    return {
        "steps": len(probe.records),
        "bias_failures": bias_failures,
        "norm_failures": norm_failures if norm_applicable else None,
        "sigma_sq_hat": sigma_sq,
    }
