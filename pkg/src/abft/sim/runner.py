from __future__ import annotations

"""Replicated Monte Carlo runs and grid sweeps.

Seeding: replication ``k`` of grid point ``i`` draws from
``default_rng(SeedSequence(seed, spawn_key=(i, k)))``. Every stream is fixed
by (seed, i, k) alone, so results are bit-identical regardless of worker
count or scheduling, and a one-point sweep reproduces ``run``.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from abft.domain.experiment import apply_point
from abft.domain.params import NetworkConfig, ProtocolParams, validate
from abft.sim.engine import ReplicationMetrics, run_replication
from abft.worker.pool import ordered_map

logger = logging.getLogger("abft.sim")

Z_95 = 1.96
METRICS = ("p_hat_s", "S", "D", "collisions_per_bi", "tau", "p")


def replication_rng(seed: int, point_index: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point_index, run_index)))


@dataclass(frozen=True)
class SimReport:
    N: int
    M: int
    R: int
    W: int
    p_hat_s_emp: float
    S_emp: float
    D_emp: float
    ci_half_widths: dict[str, float]
    per_run: tuple[ReplicationMetrics, ...]
    collisions_per_bi: float
    tau_emp: float
    p_emp: float
    episodes: int

    def metrics(self) -> dict[str, tuple[float, float]]:
        values = {
            "p_hat_s": self.p_hat_s_emp,
            "S": self.S_emp,
            "D": self.D_emp,
            "collisions_per_bi": self.collisions_per_bi,
            "tau": self.tau_emp,
            "p": self.p_emp,
        }
        return {name: (values[name], self.ci_half_widths[name]) for name in METRICS}


def _mean_and_half_width(values: np.ndarray) -> tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return math.nan, math.nan
    mean = float(finite.mean())
    if finite.size < 2:
        return mean, 0.0
    return mean, float(Z_95 * finite.std(ddof=1) / math.sqrt(finite.size))


def summarize(
    params: ProtocolParams, net: NetworkConfig, per_run: Sequence[ReplicationMetrics]
) -> SimReport:
    means: dict[str, float] = {}
    half: dict[str, float] = {}
    for name in METRICS:
        means[name], half[name] = _mean_and_half_width(
            np.array([getattr(m, name) for m in per_run], dtype=float)
        )
    return SimReport(
        N=net.N,
        M=params.M,
        R=params.R,
        W=params.W,
        p_hat_s_emp=means["p_hat_s"],
        S_emp=means["S"],
        D_emp=means["D"],
        ci_half_widths=half,
        per_run=tuple(per_run),
        collisions_per_bi=means["collisions_per_bi"],
        tau_emp=means["tau"],
        p_emp=means["p"],
        episodes=sum(m.episodes for m in per_run),
    )


def _replicate(
    params: ProtocolParams, net: NetworkConfig, point_index: int, run_index: int
) -> ReplicationMetrics:
    metrics, _ = run_replication(params, net, replication_rng(net.seed, point_index, run_index))
    return metrics


def _replicate_with_state(
    params: ProtocolParams, net: NetworkConfig, point_index: int, run_index: int
) -> tuple[ReplicationMetrics, tuple[tuple[int, int], ...]]:
    metrics, table = run_replication(
        params, net, replication_rng(net.seed, point_index, run_index)
    )
    return metrics, table.joint_state()


def run(
    params: ProtocolParams,
    net: NetworkConfig,
    point_index: int = 0,
    workers: int = 1,
    progress: bool = False,
) -> SimReport:
    validate(params, net)
    logger.info(
        "Simulating N=%s M=%s R=%s W=%s: %s runs x %s BIs (warmup %s)",
        net.N,
        params.M,
        params.R,
        params.W,
        net.run_count,
        net.bi_count,
        net.warmup_bi,
    )
    per_run = ordered_map(
        partial(_replicate, params, net, point_index),
        range(net.run_count),
        workers=workers,
        progress=progress,
        desc=f"N={net.N} M={params.M}",
    )
    return summarize(params, net, per_run)


def sweep(
    params: ProtocolParams,
    net: NetworkConfig,
    points: Sequence[dict[str, int]],
    workers: int = 1,
    progress: bool = False,
) -> list[tuple[dict[str, int], SimReport]]:
    if not points:
        raise ValueError("sweep needs at least one grid point")
    out: list[tuple[dict[str, int], SimReport]] = []
    for i, point in enumerate(points):
        point_params, point_net = apply_point(params, net, point)
        out.append(
            (
                dict(point),
                run(point_params, point_net, point_index=i, workers=workers, progress=progress),
            )
        )
    return out


def run_with_final_states(
    params: ProtocolParams,
    net: NetworkConfig,
    point_index: int = 0,
    workers: int = 1,
) -> tuple[SimReport, list[tuple[tuple[int, int], ...]]]:
    """``run`` plus the final joint (r, w) state of every replication."""
    validate(params, net)
    results = ordered_map(
        partial(_replicate_with_state, params, net, point_index),
        range(net.run_count),
        workers=workers,
    )
    report = summarize(params, net, [metrics for metrics, _ in results])
    return report, [state for _, state in results]


def sample_final_states(
    params: ProtocolParams,
    net: NetworkConfig,
    point_index: int = 0,
    workers: int = 1,
) -> list[tuple[tuple[int, int], ...]]:
    """Final joint (r, w) state of every replication: one independent draw per run."""
    _, states = run_with_final_states(params, net, point_index=point_index, workers=workers)
    return states
