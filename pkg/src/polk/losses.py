"""Instantaneous classification losses and their score-space gradients.

Three losses are supported:

* ``multi_hinge``     -- multi-class hinge, max(0, 1 + f_r(x) - f_y(x)) with
  r the best wrong-class score; labels in {1..C}, C >= 2.
* ``multi_logistic``  -- negative log likelihood of the softmax model
  P(y=c|x) = exp(f_c(x)) / sum_c' exp(f_c'(x)); labels in {1..C}, C >= 2.
* ``binary_logistic`` -- single activation modeling the odds of label 0,
  P(y=0|x) = sigma(f(x)); labels in {0, 1}, C = 1.

Gradients are with respect to the score vector f(x) and exclude the
lambda-regularizer; the trainer applies the (1 - eta*lambda) shrink itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import UsageError
from .kernels import Array, KernelExpansion, evaluate, evaluate_batch, hilbert_norm

LOSS_NAMES = ("multi_hinge", "multi_logistic", "binary_logistic")


@dataclass(frozen=True)
class LossKind:
    kind: str
    num_classes: int

    def __post_init__(self):
        if self.kind not in LOSS_NAMES:
            raise UsageError(f"unknown loss kind: {self.kind!r}")
        if self.kind == "binary_logistic":
            if self.num_classes != 1:
                raise UsageError("binary_logistic uses a single activation (C = 1)")
        elif self.num_classes < 2:
            raise UsageError(f"{self.kind} requires at least two classes")


@dataclass(frozen=True)
class LossGrad:
    value: float
    grad: Array  # length C


def _check_label(kind: LossKind, label: int) -> int:
    label = int(label)
    if kind.kind == "binary_logistic":
        if label not in (0, 1):
            raise UsageError(f"binary label must be 0 or 1, got {label}")
    elif not 1 <= label <= kind.num_classes:
        raise UsageError(f"label {label} outside alphabet 1..{kind.num_classes}")
    return label


def loss_and_grad(kind: LossKind, scores: Array, label: int) -> LossGrad:
    """Loss value and gradient d loss / d f_c(x) at one sample."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.shape[0] != kind.num_classes:
        raise UsageError(
            f"expected {kind.num_classes} scores, got {scores.shape[0]}"
        )
    if not np.all(np.isfinite(scores)):
        raise UsageError("scores must be finite")
    label = _check_label(kind, label)
    grad = np.zeros_like(scores)

    if kind.kind == "multi_hinge":
        y = label - 1
        masked = scores.copy()
        masked[y] = -np.inf
        r = int(np.argmax(masked))  # ties resolve to the smallest class index
        value = max(0.0, 1.0 + scores[r] - scores[y])
        if value > 0.0:
            grad[r] = 1.0
            grad[y] = -1.0
        return LossGrad(float(value), grad)

    if kind.kind == "multi_logistic":
        y = label - 1
        shift = scores - scores.max()
        expd = np.exp(shift)
        total = expd.sum()
        value = float(np.log(total) - shift[y])
        grad = expd / total
        grad[y] -= 1.0
        return LossGrad(value, grad)

    # binary_logistic: P(y=0|x) = sigma(f)
    fval = scores[0]
    value = float(np.logaddexp(0.0, fval) - fval * (label == 0))
    grad[0] = float(expit(fval) - (label == 0))
    return LossGrad(value, grad)


def loss_values(kind: LossKind, scores: Array, labels: Array) -> Array:
    """Vectorized loss values for an (N, C) score matrix."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64).ravel()
    n = scores.shape[0]
    if kind.kind == "multi_hinge":
        idx = np.arange(n)
        s_y = scores[idx, labels - 1]
        masked = scores.copy()
        masked[idx, labels - 1] = -np.inf
        s_r = masked.max(axis=1)
        return np.maximum(0.0, 1.0 + s_r - s_y)
    if kind.kind == "multi_logistic":
        shift = scores - scores.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shift).sum(axis=1))
        return lse - shift[np.arange(n), labels - 1]
    f = scores[:, 0]
    return np.logaddexp(0.0, f) - f * (labels == 0)


def grad_norm_bound(kind: LossKind) -> float:
    """Upper bound on the euclidean norm of the score gradient.

    Per-entry gradients are bounded by 1 for every loss; jointly over C
    outputs the multi-class losses reach sqrt(2) (one +1 and one -1 entry),
    while the binary loss is scalar.
    """
    if kind.kind == "binary_logistic":
        return 1.0
    return float(np.sqrt(2.0))


def predict(f: KernelExpansion, x: Array) -> int:
    """Predicted label at x: argmax class (ties to the smallest index) for
    multi-class expansions, or {0,1} from the modeled odds when C = 1."""
    scores = evaluate(f, x)
    if f.num_classes == 1:
        return 0 if scores[0] > 0.0 else 1
    return int(np.argmax(scores)) + 1


def predict_batch(f: KernelExpansion, X: Array) -> Array:
    scores = evaluate_batch(f, X)
    if f.num_classes == 1:
        return np.where(scores[:, 0] > 0.0, 0, 1).astype(np.int64)
    return (np.argmax(scores, axis=1) + 1).astype(np.int64)


def regularized_risk(f: KernelExpansion, data, kind: LossKind, lam: float) -> float:
    """(1/N) sum_n loss(f(x_n), y_n) + (lambda/2) ||f||_H^2 over a dataset."""
    if lam < 0:
        raise UsageError("lambda must be nonnegative")
    if len(data.labels) == 0:
        raise UsageError("empty dataset")
    scores = evaluate_batch(f, data.features)
    mean_loss = float(np.mean(loss_values(kind, scores, data.labels)))
    return mean_loss + 0.5 * lam * hilbert_norm(f) ** 2


def error_rate_pct(f: KernelExpansion, data) -> float:
    """Misclassification rate of the expansion on a dataset, in percent."""
    if len(data.labels) == 0:
        raise UsageError("empty dataset")
    pred = predict_batch(f, data.features)
    return 100.0 * float(np.mean(pred != data.labels))
