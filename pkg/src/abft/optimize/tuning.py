from __future__ import annotations

"""Parameter tuning on top of the analytic model.

Slot count: closed-form optimum of the exponential approximation, rounded to
the better integer neighbour. Retry limit and contention window: exhaustive
search over [1, R_max] x [1, W_max] maximizing the exact efficiency S, meant
to be computed offline and loaded by the AP as a lookup table keyed by (N, M).
The retry-limit curve searches R alone with W fixed; the joint optimum has a
flat ridge along which R* drifts with W.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from abft.analytic import model
from abft.domain.params import ProtocolParams, validate_search_bounds
from abft.worker.pool import ordered_map

logger = logging.getLogger("abft.optimize")

TIE_TOL = 1e-12
# Collision probability at which the approximation peaks (x = 1).
RELAXED_P = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class SlotCountResult:
    N: int
    M_star_real: float
    M_star_int: int
    S_at_opt: float
    S_hat_at_opt: float


@dataclass(frozen=True)
class TuningResult:
    N: int
    M: int
    R_star: int
    W_star: int
    S_star: float
    D_star: float
    # S_grid[r - 1, w - 1] is the efficiency at retry limit r, window w.
    S_grid: np.ndarray


@dataclass(frozen=True)
class TuningRow:
    N: int
    M: int
    R_star: int
    W_star: int
    S_star: float
    D_star: float


@dataclass(frozen=True)
class TuningTable:
    rows: tuple[TuningRow, ...]

    def lookup(self, N: int, M: int) -> TuningRow:
        for row in self.rows:
            if row.N == N and row.M == M:
                return row
        raise KeyError((N, M))


@dataclass(frozen=True)
class RetryLimitRow:
    N: int
    M: int
    W: int
    R_star: int
    S_star: float


@dataclass(frozen=True)
class ComparisonRow:
    N: int
    M: int
    R_default: int
    W_default: int
    S_default: float
    D_default: float
    R_star: int
    W_star: int
    S_tuned: float
    D_tuned: float

    @property
    def S_gain(self) -> float:
        return self.S_tuned / self.S_default - 1.0 if self.S_default > 0 else math.inf

    @property
    def D_reduction(self) -> float:
        if not math.isfinite(self.D_default):
            return 1.0
        return 1.0 - self.D_tuned / self.D_default


def relaxed_slot_count(params: ProtocolParams, N: int) -> float:
    """M that makes tau * N / M = 1 with tau taken at p = 1 - 1/e."""
    return N / ((RELAXED_P**params.R) * (params.W - 1) / 2.0 + 1.0)


def relaxed_efficiency(params: ProtocolParams, N: int, M: float) -> float:
    x = model.activity_probability(params, RELAXED_P) * N / M
    return x * math.exp(-x)


def optimal_slot_count(params: ProtocolParams, N: int) -> SlotCountResult:
    if N < 1:
        raise ValueError("N must be ≥ 1")
    m_real = relaxed_slot_count(params, N)
    best: tuple[float, int, model.AnalyticReport] | None = None
    for m in sorted({max(1, math.floor(m_real)), max(1, math.ceil(m_real))}):
        rep = model.report(dataclasses.replace(params, M=m), N)
        if best is None or rep.S_hat > best[0] + TIE_TOL:
            best = (rep.S_hat, m, rep)
    assert best is not None
    _, m_int, rep = best
    return SlotCountResult(
        N=N, M_star_real=m_real, M_star_int=m_int, S_at_opt=rep.S, S_hat_at_opt=rep.S_hat
    )


def slot_count_curve(params: ProtocolParams, Ns: Sequence[int]) -> list[SlotCountResult]:
    return [optimal_slot_count(params, N) for N in Ns]


def _efficiency_row(params: ProtocolParams, N: int, M: int, R: int) -> np.ndarray:
    row = np.empty(params.W_max)
    for W in range(1, params.W_max + 1):
        row[W - 1] = model.report(dataclasses.replace(params, M=M, R=R, W=W), N).S
    return row


def _argmax(grid: np.ndarray) -> tuple[int, int]:
    # Row-major scan: the first cell within TIE_TOL of the max has the smallest R, then W.
    best = float(np.max(grid))
    for (i, j), value in np.ndenumerate(grid):
        if value >= best - TIE_TOL:
            return i, j
    raise AssertionError("empty grid")


def tune(params: ProtocolParams, N: int, M: int, workers: int = 1) -> TuningResult:
    validate_search_bounds(params)
    rows = ordered_map(
        partial(_efficiency_row, params, N, M), range(1, params.R_max + 1), workers=workers
    )
    grid = np.vstack(rows)
    i, j = _argmax(grid)
    R_star, W_star = i + 1, j + 1
    best = model.report(dataclasses.replace(params, M=M, R=R_star, W=W_star), N)
    logger.debug("Tuned N=%s M=%s -> R*=%s W*=%s S*=%.6f", N, M, R_star, W_star, best.S)
    return TuningResult(
        N=N, M=M, R_star=R_star, W_star=W_star, S_star=best.S, D_star=best.D, S_grid=grid
    )


def optimal_retry_limit(params: ProtocolParams, N: int, M: int) -> tuple[int, float]:
    """Best R in [1, R_max] with W held at params.W; ties go to the smaller R."""
    validate_search_bounds(params)
    best_R, best_S = 1, -math.inf
    for R in range(1, params.R_max + 1):
        S = model.report(dataclasses.replace(params, M=M, R=R), N).S
        if S > best_S + TIE_TOL:
            best_R, best_S = R, S
    return best_R, best_S


def _retry_limit_cell(params: ProtocolParams, cell: tuple[int, int]) -> RetryLimitRow:
    N, M = cell
    R_star, S_star = optimal_retry_limit(params, N, M)
    return RetryLimitRow(N=N, M=M, W=params.W, R_star=R_star, S_star=S_star)


def retry_limit_curve(
    params: ProtocolParams, Ns: Sequence[int], Ms: Sequence[int], workers: int = 1
) -> list[RetryLimitRow]:
    """optimal_retry_limit over the (N, M) grid, N outermost like build_table."""
    cells = [(N, M) for N in Ns for M in Ms]
    return ordered_map(partial(_retry_limit_cell, params), cells, workers=workers)


def _tune_cell(params: ProtocolParams, cell: tuple[int, int]) -> TuningRow:
    N, M = cell
    result = tune(params, N, M)
    return TuningRow(
        N=N,
        M=M,
        R_star=result.R_star,
        W_star=result.W_star,
        S_star=result.S_star,
        D_star=result.D_star,
    )


def build_table(
    params: ProtocolParams,
    Ns: Sequence[int],
    Ms: Sequence[int],
    workers: int = 1,
    progress: bool = False,
) -> TuningTable:
    if not Ns or not Ms:
        raise ValueError("build_table needs non-empty N and M grids")
    validate_search_bounds(params)
    cells = [(N, M) for N in Ns for M in Ms]
    rows = ordered_map(
        partial(_tune_cell, params), cells, workers=workers, progress=progress, desc="tuning"
    )
    _check_monotone(rows)
    return TuningTable(rows=tuple(rows))


def _check_monotone(rows: Sequence[TuningRow]) -> None:
    by_M: dict[int, list[TuningRow]] = {}
    for row in rows:
        by_M.setdefault(row.M, []).append(row)
    for M, group in by_M.items():
        group = sorted(group, key=lambda r: r.N)
        for prev, cur in zip(group, group[1:]):
            if cur.R_star > prev.R_star:
                logger.warning(
                    "R* increases with N at M=%s: R*(N=%s)=%s < R*(N=%s)=%s",
                    M,
                    prev.N,
                    prev.R_star,
                    cur.N,
                    cur.R_star,
                )


def compare(
    params: ProtocolParams,
    N: int,
    M: int,
    workers: int = 1,
    tuned: TuningRow | TuningResult | None = None,
) -> ComparisonRow:
    """Default (params.R, params.W) against the tuned optimum at the same (N, M).

    Pass ``tuned`` (a table row for this cell) to skip the search.
    """
    default = model.report(dataclasses.replace(params, M=M), N)
    if tuned is None:
        tuned = tune(params, N, M, workers=workers)
    elif (tuned.N, tuned.M) != (N, M):
        raise ValueError(f"tuned row is for N={tuned.N} M={tuned.M}, not N={N} M={M}")
    return ComparisonRow(
        N=N,
        M=M,
        R_default=params.R,
        W_default=params.W,
        S_default=default.S,
        D_default=default.D,
        R_star=tuned.R_star,
        W_star=tuned.W_star,
        S_tuned=tuned.S_star,
        D_tuned=tuned.D_star,
    )
