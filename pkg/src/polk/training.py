"""The parsimonious online training loop.

Each step builds the unconstrained stochastic-gradient candidate: surviving
weights shrink by (1 - eta*lambda) and every batch point is appended as a
new atom carrying -(eta/L) times its loss gradient. The candidate is then
handed to the matching-pursuit pruner with the step's approximation budget,
which projects it back onto a parsimonious dictionary. A ``dense`` budget
rule skips pruning entirely and reproduces plain functional SGD.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConfigError, UsageError
from .kernels import (
    Array,
    KernelExpansion,
    KernelSpec,
    evaluate_batch,
    gram,
    hilbert_norm,
)
from .komp import PruneBudget, PruneReport, komp_prune
from .losses import (
    LossKind,
    error_rate_pct,
    grad_norm_bound,
    loss_and_grad,
    regularized_risk,
)
from .metrics import MetricsRecord

TRAILING_FRACTION = 0.05


@dataclass(frozen=True)
class StepSchedule:
    """constant: eta_t = eta0. diminishing: eta_t = eta0 / (t + 1)."""

    kind: str
    eta0: float

    def __post_init__(self):
        if self.kind not in ("constant", "diminishing"):
            raise ConfigError(f"unknown schedule: {self.kind!r}")
        if not self.eta0 > 0:
            raise ConfigError("step size must be positive")


@dataclass(frozen=True)
class BudgetRule:
    """matched_constant: eps = K * eta^1.5; matched_diminishing: eps_t = eta_t^2;
    fixed: eps_t = eps; dense: eps = 0 and pruning is skipped."""

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("matched_constant", "matched_diminishing", "fixed", "dense"):
            raise ConfigError(f"unknown budget rule: {self.kind!r}")
        if self.kind in ("matched_constant", "fixed"):
            if self.value is None or self.value < 0:
                raise ConfigError(f"{self.kind} needs a nonnegative value")


def schedule_eval(schedule: StepSchedule, t: int) -> float:
    if t < 0:
        raise UsageError("step index must be nonnegative")
    if schedule.kind == "constant":
        return schedule.eta0
    return schedule.eta0 / (t + 1)


def budget_eval(rule: BudgetRule, eta: float) -> float:
    if rule.kind == "matched_constant":
        return rule.value * eta ** 1.5
    if rule.kind == "matched_diminishing":
        return eta * eta
    if rule.kind == "fixed":
        return rule.value
    return 0.0  # dense


@dataclass(frozen=True)
class TrainConfig:
    kernel: KernelSpec
    loss: LossKind
    lam: float
    schedule: StepSchedule
    budget: BudgetRule
    batch_size: int = 1
    max_model_order: int | None = None
    seed: int = 0
    checkpoint_every: int = 10

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")
        if self.batch_size < 1:
            raise ConfigError("batch size must be positive")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint cadence must be positive")
        if self.lam > 0 and schedule_eval(self.schedule, 0) >= 1.0 / self.lam:
            raise ConfigError(
                "step size violates eta < 1/lambda "
                f"(eta_0 = {schedule_eval(self.schedule, 0)}, 1/lambda = {1.0 / self.lam})"
            )


@dataclass
class TrainerState:
    f: KernelExpansion
    t: int = 0
    samples_seen: int = 0


def fsgd_candidate(
    f: KernelExpansion,
    X_batch: Array,
    y_batch: Array,
    kind: LossKind,
    eta: float,
    lam: float,
    max_model_order: int | None = None,
) -> KernelExpansion:
    """One unconstrained functional stochastic gradient step as an expansion."""
    X_batch = np.atleast_2d(np.asarray(X_batch, dtype=np.float64))
    y_batch = np.asarray(y_batch, dtype=np.int64).ravel()
    L = X_batch.shape[0]
    if L == 0:
        raise UsageError("batch must be nonempty")
    if lam > 0 and eta * lam >= 1.0:
        raise ConfigError("step size violates eta < 1/lambda")
    if max_model_order is not None and f.model_order + L > max_model_order:
        raise CapacityError(
            f"candidate model order {f.model_order + L} exceeds cap {max_model_order}"
        )
    scores = evaluate_batch(f, X_batch)
    grads = np.stack(
        [loss_and_grad(kind, scores[i], y_batch[i]).grad for i in range(L)]
    )
    new_points = np.vstack([f.points, X_batch]) if f.model_order else X_batch
    new_weights = np.vstack([(1.0 - eta * lam) * f.weights, -(eta / L) * grads])
    return KernelExpansion(f.kernel, new_points, new_weights)


def project_step(
    candidate: KernelExpansion,
    epsilon: float,
    dense: bool = False,
    max_model_order: int | None = None,
) -> tuple[KernelExpansion, PruneReport]:
    """Sparsify the candidate within budget; dense mode passes it through."""
    if dense:
        return candidate, PruneReport((), 0.0, 0)
    return komp_prune(candidate, PruneBudget(epsilon, max_model_order))


def regularized_gradient(
    f: KernelExpansion, X: Array, y: Array, kind: LossKind, lam: float
) -> KernelExpansion:
    """The batch-averaged regularized functional gradient as an expansion:
    (1/L) sum_i loss'(f(x_i), y_i) kappa(x_i, .) + lambda f."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64).ravel()
    scores = evaluate_batch(f, X)
    grads = np.stack(
        [loss_and_grad(kind, scores[i], y[i]).grad for i in range(X.shape[0])]
    )
    points = np.vstack([f.points, X]) if f.model_order else X
    weights = np.vstack([lam * f.weights, grads / X.shape[0]])
    return KernelExpansion(f.kernel, points, weights)


def _shift_distance(K_cand: Array, w_old: Array, active: Array, w_new: Array) -> float:
    """||f_{t+1} - f_t||_H with both supported on the candidate atoms."""
    delta = -w_old
    if active.size:
        delta[active] += w_new
    return float(np.sqrt(max(np.sum(delta * (K_cand @ delta)), 0.0)))


def train(config: TrainConfig, stream, eval_set=None, probe=None):
    """Run the training loop over an iterator of (X, y) batches.

    Returns the final expansion and the list of per-checkpoint metrics
    records. Trailing columns average the checkpoints falling in the final
    5% of the samples processed so far, which at the last checkpoint is the
    reporting window over the whole stream.
    """
    lip = grad_norm_bound(config.loss)
    kernel_bound = 1.0 if config.kernel.family == "gaussian" else 0.0
    records: list[MetricsRecord] = []
    risks: list[float] = []
    errors: list[float] = []
    orders: list[int] = []
    seen: list[int] = []
    state = None
    t_start = time.monotonic()

    def checkpoint(state, eta, eps, bias):
        f = state.f
        risk = err = float("nan")
        if eval_set is not None:
            risk = regularized_risk(f, eval_set, config.loss, config.lam)
            err = error_rate_pct(f, eval_set)
        risks.append(risk)
        errors.append(err)
        orders.append(f.model_order)
        seen.append(state.samples_seen)
        cutoff = (1.0 - TRAILING_FRACTION) * state.samples_seen
        window = [i for i, s in enumerate(seen) if s > cutoff]
        norm_bound = lip * kernel_bound / config.lam if config.lam > 0 else float("nan")
        records.append(
            MetricsRecord(
                t=state.t,
                samples_seen=state.samples_seen,
                eta=eta,
                epsilon=eps,
                model_order=f.model_order,
                empirical_risk=risk,
                test_error_pct=err,
                bias=bias,
                bias_bound=eps / eta,
                iterate_norm=hilbert_norm(f),
                norm_bound=norm_bound,
                trailing_risk=float(np.mean([risks[i] for i in window])),
                trailing_error_pct=float(np.mean([errors[i] for i in window])),
                trailing_order=float(np.mean([orders[i] for i in window])),
                elapsed_sec=time.monotonic() - t_start,
            )
        )

    pending = None
    for X_batch, y_batch in stream:
        if state is None:
            p = np.atleast_2d(np.asarray(X_batch)).shape[1]
            state = TrainerState(
                KernelExpansion.zero(config.kernel, p, config.loss.num_classes)
            )

        t = state.t
        eta = schedule_eval(config.schedule, t)
        if config.lam > 0 and eta >= 1.0 / config.lam:
            raise ConfigError("step size violates eta < 1/lambda at step %d" % t)
        eps = budget_eval(config.budget, eta)
        dense = config.budget.kind == "dense"

        candidate = fsgd_candidate(
            state.f, X_batch, y_batch, config.loss, eta, config.lam,
            config.max_model_order,
        )
        f_next, report = project_step(
            candidate, eps, dense=dense, max_model_order=config.max_model_order
        )
        bias = report.final_error / eta

        if probe is not None:
            if config.kernel.family != "gaussian":
                kern_diag = gram(config.kernel, X_batch, X_batch).diagonal()
                kernel_bound = max(kernel_bound, float(np.sqrt(kern_diag.max())))
            K_cand = gram(config.kernel, candidate.points, candidate.points)
            w_old = np.zeros_like(candidate.weights)
            M_prev = state.f.model_order
            w_old[:M_prev] = state.f.weights
            kept = np.setdiff1d(
                np.arange(candidate.model_order), np.asarray(report.removed_indices)
            )
            shift = _shift_distance(K_cand, w_old, kept, f_next.weights)
            probe.kernel_bound_X = kernel_bound
            probe.observe(
                t=t,
                eta=eta,
                epsilon=eps,
                bias=bias,
                iterate_norm=hilbert_norm(f_next),
                grad_norm_sq=(shift / eta) ** 2,
                f=f_next,
            )

        state.f = f_next
        state.t = t + 1
        state.samples_seen += len(y_batch)
        if state.t % config.checkpoint_every == 0:
            checkpoint(state, eta, eps, bias)
            pending = None
        else:
            pending = (state, eta, eps, bias)

    if state is None:
        raise UsageError("training stream yielded no batches")
    if pending is not None:  # always close with a final checkpoint
        checkpoint(*pending)
    return state.f, records
