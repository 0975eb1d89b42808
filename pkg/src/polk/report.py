"""Render training figures from a metrics CSV, next to the delimited output.

Produces the standard trio of curves (empirical risk, test error, model
order against samples processed) plus a bias-versus-budget overlay, and,
for planar models, a decision-surface map with the dictionary atoms drawn
on top of the evaluation data.
"""

from __future__ import annotations

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data import Dataset  # noqa: E402
from .kernels import KernelExpansion  # noqa: E402
from .losses import predict_batch  # noqa: E402
from .metrics import read_metrics_csv  # noqa: E402


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_metrics_figures(metrics_path, out_dir) -> list[str]:
    """Write risk/error/model-order/bias figures; returns the file paths."""
    records = read_metrics_csv(metrics_path)
    os.makedirs(out_dir, exist_ok=True)
    samples = np.array([r.samples_seen for r in records])
    written = []

    risk = np.array([r.empirical_risk for r in records])
    if np.isfinite(risk).any():
        fig, ax = plt.subplots(figsize=(5, 3.4))
        ax.plot(samples, risk, marker=".", lw=1.2)
        if np.nanmin(risk) > 0:
            ax.set_yscale("log")
        ax.set_xlabel("samples processed")
        ax.set_ylabel("empirical risk")
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir, "risk.png"))

    err = np.array([r.test_error_pct for r in records])
    if np.isfinite(err).any():
        fig, ax = plt.subplots(figsize=(5, 3.4))
        ax.plot(samples, err, marker=".", lw=1.2, color="tab:red")
        ax.set_xlabel("samples processed")
        ax.set_ylabel("test error (%)")
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir, "error.png"))

    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(samples, [r.model_order for r in records], marker=".", lw=1.2,
            color="tab:green")
    ax.set_xlabel("samples processed")
    ax.set_ylabel("model order")
    ax.grid(True, alpha=0.3)
    written.append(_save(fig, out_dir, "model_order.png"))

    bias = np.array([r.bias for r in records])
    bound = np.array([r.bias_bound for r in records])
    if np.isfinite(bias).any():
        fig, ax = plt.subplots(figsize=(5, 3.4))
        ax.plot(samples, bias, marker=".", lw=1.2, label="projection bias")
        ax.plot(samples, bound, lw=1.2, ls="--", label="eps/eta bound")
        ax.set_xlabel("samples processed")
        ax.set_ylabel("Hilbert norm")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir, "bias.png"))
    return written


def render_decision_surface(f: KernelExpansion, data: Dataset, out_dir,
                            grid: int = 200) -> str:
    """Classify a planar grid around the data and overlay dictionary atoms."""
    if f.dim != 2:
        raise ValueError("decision surface rendering needs 2-d features")
    os.makedirs(out_dir, exist_ok=True)
    X = data.features
    lo = X.min(axis=0) - 0.5
    hi = X.max(axis=0) + 0.5
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid),
                         np.linspace(lo[1], hi[1], grid))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    labels = predict_batch(f, pts).reshape(gx.shape)

    fig, ax = plt.subplots(figsize=(5, 4.2))
    ax.pcolormesh(gx, gy, labels, cmap="tab10", alpha=0.25, shading="auto")
    ax.scatter(X[:, 0], X[:, 1], c=data.labels, cmap="tab10", s=4, lw=0)
    if f.model_order:
        ax.scatter(f.points[:, 0], f.points[:, 1], c="black", s=26, marker="o",
                   label=f"dictionary (M={f.model_order})")
        ax.legend(fontsize=8, loc="upper right")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    return _save(fig, out_dir, "decision_surface.png")
