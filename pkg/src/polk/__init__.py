"""Parsimonious online learning with kernels.

Streaming kernel classifiers trained by functional stochastic gradient
descent, kept sparse by destructive kernel orthogonal matching pursuit with
a per-step approximation budget tied to the step size.
"""

from .data import Dataset, MultidistSpec, gen_multidist, load_dense_csv, load_sparse_text
from .diagnostics import TheoryProbe, bias_check, norm_bound_check, variance_estimate
from .errors import CapacityError, ConfigError, DiagnosticFailure, ParseError, UsageError
from .kernels import (
    Dictionary,
    GramBundle,
    KernelExpansion,
    KernelSpec,
    evaluate,
    evaluate_batch,
    expansion_distance,
    gram,
    hilbert_inner,
    hilbert_norm,
    kernel_eval,
    kernel_vector,
)
from .komp import PruneBudget, PruneReport, komp_prune, refit_weights, removal_error, subspace_distance
from .losses import LossGrad, LossKind, loss_and_grad, predict, regularized_risk
from .modelio import load_model, save_model
from .training import (
    BudgetRule,
    StepSchedule,
    TrainConfig,
    budget_eval,
    fsgd_candidate,
    project_step,
    schedule_eval,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetRule",
    "CapacityError",
    "ConfigError",
    "Dataset",
    "DiagnosticFailure",
    "Dictionary",
    "GramBundle",
    "KernelExpansion",
    "KernelSpec",
    "LossGrad",
    "LossKind",
    "MultidistSpec",
    "ParseError",
    "PruneBudget",
    "PruneReport",
    "StepSchedule",
    "TheoryProbe",
    "TrainConfig",
    "UsageError",
    "bias_check",
    "budget_eval",
    "evaluate",
    "evaluate_batch",
    "expansion_distance",
    "fsgd_candidate",
    "gen_multidist",
    "gram",
    "hilbert_inner",
    "hilbert_norm",
    "kernel_eval",
    "kernel_vector",
    "komp_prune",
    "load_dense_csv",
    "load_model",
    "load_sparse_text",
    "loss_and_grad",
    "norm_bound_check",
    "predict",
    "project_step",
    "refit_weights",
    "regularized_risk",
    "removal_error",
    "save_model",
    "schedule_eval",
    "subspace_distance",
    "train",
    "variance_estimate",
]
