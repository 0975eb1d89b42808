"""Command-line interface: gen / train / eval / diag / report.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O or parse
error, 3 model-order capacity exceeded, 4 diagnostic check failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .data import (
    Dataset,
    MultidistSpec,
    gen_multidist,
    load_dense_csv,
    load_sparse_text,
    stream_batches,
    write_dense_csv,
)
from .diagnostics import TheoryProbe, summarize
from .errors import CapacityError, ConfigError, DiagnosticFailure, ParseError, UsageError
from .kernels import KernelSpec
from .losses import LossKind, error_rate_pct
from .metrics import write_metrics_csv
from .modelio import load_model, save_model
from .training import BudgetRule, StepSchedule, TrainConfig, train

TASKS = {"mksvm": "multi_hinge", "mlogistic": "multi_logistic", "blogistic": "binary_logistic"}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CAPACITY = 3
EXIT_DIAGNOSTIC = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def parse_budget(text: str) -> BudgetRule:
    try:
        if text == "dense":
            return BudgetRule("dense")
        if text == "matched-dim":
            return BudgetRule("matched_diminishing")
        if text.startswith("matchedK="):
            return BudgetRule("matched_constant", float(text.split("=", 1)[1]))
        if text.startswith("fixed="):
            return BudgetRule("fixed", float(text.split("=", 1)[1]))
    except ValueError as exc:
        raise UsageError(f"bad budget {text!r} ({exc})") from None
    raise UsageError(
        f"bad budget {text!r}; expected matchedK=<K>, matched-dim, fixed=<eps>, or dense"
    )


_CONFIG_TYPES = {
    "task": str, "data": str, "eval": str, "kernel": str, "bandwidth": float,
    "poly_offset": float, "poly_degree": int, "eta": float, "schedule": str,
    "budget": str, "lambda_": float, "batch": int, "passes": int, "seed": int,
    "checkpoint_every": int, "model_out": str, "metrics_out": str,
    "max_model_order": int, "probe": str, "sparse_dim": int,
}


def _load_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", path, lineno)
            key, val = line.split("=", 1)
            dest = key.strip().replace("-", "_")
            if dest == "lambda":
                dest = "lambda_"
            if dest not in _CONFIG_TYPES:
                raise ParseError(f"unknown config key {key.strip()!r}", path, lineno)
            try:
                values[dest] = _CONFIG_TYPES[dest](val.strip())
            except ValueError as exc:
                raise ParseError(f"bad value for {key.strip()!r} ({exc})", path, lineno)
    return values


def _add_train_flags(sub):
    sub.add_argument("--config", help="key=value file; command-line flags override")
    sub.add_argument("--task", choices=sorted(TASKS))
    sub.add_argument("--data", help="training data (dense CSV, or sparse with --sparse-dim)")
    sub.add_argument("--eval", help="evaluation data in the same format")
    sub.add_argument("--sparse-dim", type=int,
                     help="parse data files as sparse 'label idx:val ...' rows of this dimension")
    sub.add_argument("--kernel", choices=["gaussian", "polynomial"], default="gaussian")
    sub.add_argument("--bandwidth", type=float, default=1.0,
                     help="squared bandwidth of the gaussian kernel")
    sub.add_argument("--poly-offset", type=float, default=1.0)
    sub.add_argument("--poly-degree", type=int, default=2)
    sub.add_argument("--eta", type=float, default=1.0)
    sub.add_argument("--schedule", choices=["constant", "diminishing"], default="constant")
    sub.add_argument("--budget", default="dense",
                     help="matchedK=<K> | matched-dim | fixed=<eps> | dense")
    sub.add_argument("--lambda", dest="lambda_", type=float, default=0.0)
    sub.add_argument("--batch", type=int, default=1)
    sub.add_argument("--passes", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--checkpoint-every", type=int, default=10)
    sub.add_argument("--model-out")
    sub.add_argument("--metrics-out")
    sub.add_argument("--max-model-order", type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="polk", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="generate the synthetic mixture benchmark")
    gen.add_argument("--classes", type=int, default=MultidistSpec.num_classes)
    gen.add_argument("--train", type=int, default=MultidistSpec.n_train)
    gen.add_argument("--test", type=int, default=MultidistSpec.n_test)
    gen.add_argument("--seed", type=int, default=MultidistSpec.seed)
    gen.add_argument("--out-dir", default=".")

    tr = subs.add_parser("train", help="train a streaming kernel classifier")
    _add_train_flags(tr)

    ev = subs.add_parser("eval", help="score a saved model on a dataset")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)

    dg = subs.add_parser("diag", help="train with theory checks attached")
    _add_train_flags(dg)
    dg.add_argument("--probe", help="path for the per-step probe CSV")

    rp = subs.add_parser("report", help="render figures from a metrics CSV")
    rp.add_argument("--metrics", required=True)
    rp.add_argument("--out-dir")
    rp.add_argument("--model", help="optional saved model for a decision surface")
    rp.add_argument("--data", help="dataset to draw under the decision surface")
    return parser


def _apply_config(args, argv) -> None:
    if getattr(args, "config", None):
        overrides = _load_config_file(args.config)
        given = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
        for dest, value in overrides.items():
            flag = "--lambda" if dest == "lambda_" else "--" + dest.replace("_", "-")
            if flag not in given:
                setattr(args, dest, value)


def cmd_gen(args) -> int:
    spec = MultidistSpec(
        num_classes=args.classes, n_train=args.train, n_test=args.test, seed=args.seed
    )
    train_set, test_set = gen_multidist(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    train_path = os.path.join(args.out_dir, "train.csv")
    test_path = os.path.join(args.out_dir, "test.csv")
    write_dense_csv(train_path, train_set)
    write_dense_csv(test_path, test_set)
    print(
        "multidist classes=%d modes=%d sigma_sq=%g scatter_sq=%g "
        "train=%d test=%d seed=%d out=%s"
        % (spec.num_classes, spec.modes_per_class, spec.within_mode_var,
           spec.mean_scatter_var, spec.n_train, spec.n_test, spec.seed, args.out_dir)
    )
    return EXIT_OK


def _loss_for_task(task: str, data: Dataset) -> LossKind:
    if task is None:
        raise UsageError("--task is required")
    if task not in TASKS:
        raise UsageError(f"unknown task {task!r}; expected one of {sorted(TASKS)}")
    kind = TASKS[task]
    if kind == "binary_logistic":
        bad = set(np.unique(data.labels)) - {0, 1}
        if bad:
            raise UsageError(f"binary task needs labels in {{0,1}}, found {sorted(bad)}")
        return LossKind(kind, 1)
    if data.num_classes < 2:
        raise UsageError(f"{task} needs at least two classes in the data")
    return LossKind(kind, data.num_classes)


def _kernel_from_args(args) -> KernelSpec:
    if args.kernel == "gaussian":
        return KernelSpec.gaussian(args.bandwidth)
    return KernelSpec.polynomial(args.poly_offset, args.poly_degree)


def _load_training_data(args, path):
    if getattr(args, "sparse_dim", None):
        return load_sparse_text(path, args.sparse_dim)
    return load_dense_csv(path)


def _run_training(args, make_probe=None):
    if not args.data:
        raise UsageError("--data is required")
    kernel = _kernel_from_args(args)
    schedule = StepSchedule(args.schedule, args.eta)
    budget = parse_budget(args.budget)
    data = _load_training_data(args, args.data)
    eval_set = _load_training_data(args, args.eval) if args.eval else None
    loss = _loss_for_task(args.task, data)
    probe = make_probe(loss, kernel, args.lambda_) if make_probe else None
    config = TrainConfig(
        kernel=kernel,
        loss=loss,
        lam=args.lambda_,
        schedule=schedule,
        budget=budget,
        batch_size=args.batch,
        max_model_order=args.max_model_order,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
    )
    stream = stream_batches(data, args.batch, passes=args.passes, seed=args.seed)
    start = time.monotonic()
    f, records = train(config, stream, eval_set=eval_set, probe=probe)
    elapsed = time.monotonic() - start

    if args.model_out:
        save_model(args.model_out, f, config.lam, loss)
    if args.metrics_out:
        write_metrics_csv(args.metrics_out, records)
    last = records[-1]
    print(
        "risk=%.6g error=%.6g%% order=%.6g"
        % (last.trailing_risk, last.trailing_error_pct, last.trailing_order)
    )
    print("elapsed=%.3fs steps=%d model_order=%d" % (elapsed, last.t, f.model_order))
    return f, records, probe


def cmd_train(args) -> int:
    _run_training(args)
    return EXIT_OK


def cmd_diag(args) -> int:
    _, _, probe = _run_training(
        args, make_probe=lambda loss, kernel, lam: TheoryProbe(loss, kernel, lam)
    )
    stats = summarize(probe)
    if getattr(args, "probe", None):
        _write_probe_csv(args.probe, probe)
    norm_txt = "n/a" if stats["norm_failures"] is None else str(stats["norm_failures"])
    print(
        "bias_failures=%d norm_failures=%s sigma2_hat=%.6g"
        % (stats["bias_failures"], norm_txt, stats["sigma_sq_hat"])
    )
    failures = stats["bias_failures"] + (stats["norm_failures"] or 0)
    if failures:
        raise DiagnosticFailure(f"{failures} theory checks failed")
    return EXIT_OK


def _write_probe_csv(path, probe: TheoryProbe) -> None:
    from .diagnostics import bias_check, norm_bound_check

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,eta,epsilon,bias,bias_bound,bias_ok,iterate_norm,norm_bound,"
                 "norm_ok,grad_norm_sq\n")
        bound = (
            probe.lipschitz_C * probe.kernel_bound_X / probe.lam
            if probe.lam > 0 else float("nan")
        )
        for r in probe.records:
            fh.write(
                "%d,%r,%r,%r,%r,%s,%r,%r,%s,%r\n"
                % (r.t, r.eta, r.epsilon, r.bias, r.epsilon / r.eta,
                   bias_check(r).status, r.iterate_norm, bound,
                   norm_bound_check(r, probe).status, r.grad_norm_sq)
            )


def cmd_eval(args) -> int:
    f, _lam, _loss = load_model(args.model)
    data = load_dense_csv(args.data)
    if data.dim != f.dim:
        raise UsageError(
            f"feature dimension mismatch: model {f.dim}, data {data.dim}"
        )
    max_label = int(data.labels.max()) if len(data) else 0
    limit = 1 if f.num_classes == 1 else f.num_classes
    if max_label > limit:
        raise UsageError(
            f"label {max_label} outside the model's {limit}-class alphabet"
        )
    err = error_rate_pct(f, data)
    print("error=%.6g%% n=%d order=%d" % (err, len(data), f.model_order))
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_decision_surface, render_metrics_figures

    out_dir = args.out_dir or os.path.join(
        os.path.dirname(os.path.abspath(args.metrics)), "figures"
    )
    written = render_metrics_figures(args.metrics, out_dir)
    if args.model and args.data:
        f, _lam, _loss = load_model(args.model)
        data = load_dense_csv(args.data)
        if f.dim == 2:
            written.append(render_decision_surface(f, data, out_dir))
    for path in written:
        print("wrote %s" % path)
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "diag": cmd_diag,
    "report": cmd_report,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("train", "diag"):
            _apply_config(args, argv)
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DiagnosticFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
