"""Versioned line-oriented model files.

Layout of ``polk-model v1``::

    polk-model v1
    kernel gaussian <bandwidth_sq>        (or: kernel polynomial <offset> <degree>)
    dims <p> <M> <C>
    lambda <lambda>
    loss <kind>
    <M dictionary rows, p space-separated decimals each>
    <M weight rows, C space-separated decimals each>

Decimals carry 17 significant digits, so save -> load -> save is
byte-identical and loaded models predict exactly like their originals.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError
from .kernels import KernelExpansion, KernelSpec
from .losses import LossKind

FORMAT_TAG = "polk-model v1"


def save_model(path, f: KernelExpansion, lam: float, loss: LossKind) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(FORMAT_TAG + "\n")
        if f.kernel.family == "gaussian":
            fh.write("kernel gaussian %.17g\n" % f.kernel.bandwidth_sq)
        else:
            fh.write(
                "kernel polynomial %.17g %d\n" % (f.kernel.offset, f.kernel.degree)
            )
        fh.write("dims %d %d %d\n" % (f.dim, f.model_order, f.num_classes))
        fh.write("lambda %.17g\n" % lam)
        fh.write("loss %s\n" % loss.kind)
        for row in f.points:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")
        for row in f.weights:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def load_model(path) -> tuple[KernelExpansion, float, LossKind]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]

    def need(i, what):
        if i >= len(lines):
            raise ParseError(f"missing {what}", path, i + 1)
        return lines[i]

    if need(0, "format tag") != FORMAT_TAG:
        raise ParseError(f"not a {FORMAT_TAG} file", path, 1)

    parts = need(1, "kernel line").split()
    try:
        if parts[:2] == ["kernel", "gaussian"] and len(parts) == 3:
            kernel = KernelSpec.gaussian(float(parts[2]))
        elif parts[:2] == ["kernel", "polynomial"] and len(parts) == 4:
            kernel = KernelSpec.polynomial(float(parts[2]), int(parts[3]))
        else:
            raise ValueError(f"unrecognized kernel line {parts!r}")
    except ValueError as exc:
        raise ParseError(str(exc), path, 2) from None

    parts = need(2, "dims line").split()
    if len(parts) != 4 or parts[0] != "dims":
        raise ParseError("expected 'dims <p> <M> <C>'", path, 3)
    try:
        p, M, C = int(parts[1]), int(parts[2]), int(parts[3])
    except ValueError:
        raise ParseError("non-integer dims", path, 3) from None

    parts = need(3, "lambda line").split()
    if len(parts) != 2 or parts[0] != "lambda":
        raise ParseError("expected 'lambda <value>'", path, 4)
    lam = float(parts[1])

    parts = need(4, "loss line").split()
    if len(parts) != 2 or parts[0] != "loss":
        raise ParseError("expected 'loss <kind>'", path, 5)
    loss = LossKind(parts[1], C)

    def block(start, rows, cols, what):
        out = np.zeros((rows, cols))
        for r in range(rows):
            vals = need(start + r, f"{what} row {r + 1}").split()
            if len(vals) != cols:
                raise ParseError(
                    f"{what} row has {len(vals)} values, expected {cols}",
                    path, start + r + 1,
                )
            try:
                out[r] = [float(v) for v in vals]
            except ValueError as exc:
                raise ParseError(f"bad decimal ({exc})", path, start + r + 1) from None
        return out

    points = block(5, M, p, "dictionary")
    weights = block(5 + M, M, C, "weight")
    if len(lines) > 5 + 2 * M and any(ln.strip() for ln in lines[5 + 2 * M:]):
        raise ParseError("trailing content after weight rows", path, 5 + 2 * M + 1)
    return KernelExpansion(kernel, points.reshape(M, p), weights.reshape(M, C)), lam, loss
