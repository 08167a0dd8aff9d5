from __future__ import annotations

"""Plot-ready tables and their CSV / JSON encodings.

Column order is part of the output contract (golden headers under
fixtures/golden/). Floats are written with 6 significant digits.
"""

import dataclasses
import json
import math
import sys
from typing import Any, Iterable, Sequence

import pandas as pd

from abft.analytic.model import AnalyticReport
from abft.optimize.tuning import ComparisonRow, RetryLimitRow, SlotCountResult, TuningTable
from abft.sim.runner import SimReport

LONG_COLUMNS = ["N", "M", "R", "W", "metric", "value", "ci_half_width"]
TUNING_COLUMNS = ["N", "M", "R_star", "W_star", "S_star", "D_star"]
COMPARISON_COLUMNS = [
    "N",
    "M",
    "R_default",
    "W_default",
    "S_default",
    "D_default",
    "R_star",
    "W_star",
    "S_tuned",
    "D_tuned",
    "S_gain",
    "D_reduction",
]
SLOT_COUNT_COLUMNS = ["N", "R", "W", "M_star_real", "M_star_int", "S_at_opt", "S_hat_at_opt"]
RETRY_LIMIT_COLUMNS = ["N", "M", "W", "R_star", "S_star"]

FLOAT_FORMAT = "%.6g"


def _long_rows(
    N: int, M: int, R: int, W: int, metrics: dict[str, tuple[float, float]], prefix: str = ""
) -> list[dict[str, Any]]:
    return [
        {
            "N": N,
            "M": M,
            "R": R,
            "W": W,
            "metric": f"{prefix}{name}",
            "value": value,
            "ci_half_width": ci,
        }
        for name, (value, ci) in metrics.items()
    ]


def _analytic_metrics(rep: AnalyticReport) -> dict[str, tuple[float, float]]:
    return {name: (value, 0.0) for name, value in rep.metrics().items()}


def analytic_frame(results: Iterable[tuple[dict[str, int], AnalyticReport]]) -> pd.DataFrame:
    rows: list[dict[str, Any]] = []
    for _, rep in results:
        rows += _long_rows(rep.N, rep.M, rep.R, rep.W, _analytic_metrics(rep))
    return pd.DataFrame(rows, columns=LONG_COLUMNS)


def sim_frame(results: Iterable[tuple[dict[str, int], SimReport]]) -> pd.DataFrame:
    rows: list[dict[str, Any]] = []
    for _, rep in results:
        rows += _long_rows(rep.N, rep.M, rep.R, rep.W, rep.metrics())
    return pd.DataFrame(rows, columns=LONG_COLUMNS)


def sweep_frame(
    analytic: Sequence[tuple[dict[str, int], AnalyticReport]],
    sim: Sequence[tuple[dict[str, int], SimReport]],
) -> pd.DataFrame:
    """Analytic and simulated metrics side by side, point by point."""
    rows: list[dict[str, Any]] = []
    for (_, a), (_, s) in zip(analytic, sim):
        rows += _long_rows(a.N, a.M, a.R, a.W, _analytic_metrics(a), prefix="analytic_")
        rows += _long_rows(s.N, s.M, s.R, s.W, s.metrics(), prefix="sim_")
    return pd.DataFrame(rows, columns=LONG_COLUMNS)


def tuning_frame(table: TuningTable) -> pd.DataFrame:
    return pd.DataFrame([dataclasses.asdict(row) for row in table.rows], columns=TUNING_COLUMNS)


def comparison_frame(rows: Iterable[ComparisonRow]) -> pd.DataFrame:
    records = [
        {**dataclasses.asdict(row), "S_gain": row.S_gain, "D_reduction": row.D_reduction}
        for row in rows
    ]
    return pd.DataFrame(records, columns=COMPARISON_COLUMNS)


def slot_count_frame(results: Iterable[SlotCountResult], R: int, W: int) -> pd.DataFrame:
    records = [{**dataclasses.asdict(res), "R": R, "W": W} for res in results]
    return pd.DataFrame(records, columns=SLOT_COUNT_COLUMNS)


def retry_limit_frame(rows: Iterable[RetryLimitRow]) -> pd.DataFrame:
    return pd.DataFrame([dataclasses.asdict(row) for row in rows], columns=RETRY_LIMIT_COLUMNS)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if hasattr(value, "item"):
        return _jsonable(value.item())
    return value


def to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")


def to_json(frame: pd.DataFrame) -> str:
    records = [
        {key: _jsonable(value) for key, value in record.items()}
        for record in frame.to_dict(orient="records")
    ]
    return json.dumps(records, indent=2) + "\n"


def render(frame: pd.DataFrame, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(frame)
    if fmt == "json":
        return to_json(frame)
    raise ValueError(f"unknown output format {fmt!r}")


def write(frame: pd.DataFrame, path: str | None, fmt: str) -> None:
    """Write to ``path``, or to stdout when path is None or "-"."""
    text = render(frame, fmt)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
