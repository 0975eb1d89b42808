"""Per-checkpoint metrics records and their CSV serialization.

The CSV schema is stable: comment lines starting with '#', then the fixed
header row, then one row per checkpoint. Risk and error columns are computed
on the evaluation set passed to the trainer (a plug-in estimate of expected
risk); trailing columns average checkpoints whose sample count falls in the
final 5% of the stream processed so far. Wall-clock time is kept on the
in-memory record only, so identical seeds write byte-identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import ParseError

CSV_COLUMNS = (
    "t",
    "samples_seen",
    "eta",
    "epsilon",
    "model_order",
    "empirical_risk",
    "test_error_pct",
    "bias",
    "bias_bound",
    "iterate_norm",
    "norm_bound",
    "trailing_risk",
    "trailing_error_pct",
    "trailing_order",
)

_HEADER_COMMENT = (
    "# risk/error columns are evaluated on the held-out evaluation set; "
    "trailing columns average checkpoints in the final 5% of samples seen"
)


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    samples_seen: int
    eta: float
    epsilon: float
    model_order: int
    empirical_risk: float
    test_error_pct: float
    bias: float
    bias_bound: float
    iterate_norm: float
    norm_bound: float
    trailing_risk: float
    trailing_error_pct: float
    trailing_order: float
    elapsed_sec: float = 0.0


def _fmt(value) -> str:
    if isinstance(value, (int,)):
        return str(value)
    return repr(float(value))


def write_metrics_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_HEADER_COMMENT + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(_fmt(getattr(rec, c)) for c in CSV_COLUMNS) + "\n")


def read_metrics_csv(path) -> list[MetricsRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ParseError("empty metrics file", path)
    if tuple(rows[0]) != CSV_COLUMNS:
        raise ParseError(f"unexpected header {rows[0]!r}", path, 1)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise ParseError(f"expected {len(CSV_COLUMNS)} fields", path, i)
        try:
            records.append(
                MetricsRecord(
                    t=int(row[0]),
                    samples_seen=int(row[1]),
                    eta=float(row[2]),
                    epsilon=float(row[3]),
                    model_order=int(row[4]),
                    empirical_risk=float(row[5]),
                    test_error_pct=float(row[6]),
                    bias=float(row[7]),
                    bias_bound=float(row[8]),
                    iterate_norm=float(row[9]),
                    norm_bound=float(row[10]),
                    trailing_risk=float(row[11]),
                    trailing_error_pct=float(row[12]),
                    trailing_order=float(row[13]),
                )
            )
        except ValueError as exc:
            raise ParseError(f"bad numeric field ({exc})", path, i) from None
    return records
