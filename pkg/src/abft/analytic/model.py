from __future__ import annotations

"""Mean-field model of A-BFT contention.

A tagged STA is described by a chain over (r, w): r consecutive collisions
(0..R) and w remaining backoff BIs (0..W-1, nonzero only at r = R). Every
other STA is coupled to it only through the conditional collision
probability p, obtained as the root of

    f(p) = (1 - p_e) * (1 - tau(p) / M) ** (N - 1) + p - 1

with tau(p) = 1 / (p**R (W - 1) / 2 + 1) and p_e = 0 on a perfect channel.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy import optimize

from abft.domain.experiment import apply_point
from abft.domain.params import NetworkConfig, ProtocolParams

logger = logging.getLogger("abft.analytic")

DEFAULT_TOL = 1e-12
MAX_BISECTIONS = 200


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SteadyState:
    pi_active: np.ndarray  # pi_{r,0}, r in [0, R-1]
    pi_backoff: np.ndarray  # pi_{R,w}, w in [0, W-1]
    p: float

    def vector(self) -> np.ndarray:
        """States ordered (0,0), (1,0), ..., (R-1,0), (R,0), (R,1), ..., (R,W-1)."""
        return np.concatenate([self.pi_active, self.pi_backoff])


@dataclass(frozen=True)
class AnalyticReport:
    N: int
    M: int
    R: int
    W: int
    p: float
    tau: float
    p_s: float
    p_hat_s: float
    S: float
    S_hat: float
    D: float

    def metrics(self) -> dict[str, float]:
        return {
            "p": self.p,
            "tau": self.tau,
            "p_s": self.p_s,
            "p_hat_s": self.p_hat_s,
            "S": self.S,
            "S_hat": self.S_hat,
            "D": self.D,
        }


def _pow(p: float, k: int) -> float:
    # exp(k log p) keeps large R from underflowing through repeated products.
    if p <= 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(p))


def _backoff_mass(params: ProtocolParams, p: float) -> float:
    return _pow(p, params.R) * (params.W - 1) / 2.0


def activity_probability(params: ProtocolParams, p: float) -> float:
    return 1.0 / (_backoff_mass(params, p) + 1.0)


def collision_residual(
    params: ProtocolParams, N: int, p: float, p_error: float = 0.0
) -> float:
    tau = activity_probability(params, p)
    return (1.0 - p_error) * (1.0 - tau / params.M) ** (N - 1) + p - 1.0


def solve_collision_probability(
    params: ProtocolParams,
    N: int,
    tol: float = DEFAULT_TOL,
    p_error: float = 0.0,
) -> float:
    """Root of the fixed-point equation on [0, 1] by bisection.

    f is strictly increasing in p, f(0) <= 0 and f(1) >= 0, so the bracket
    always holds and the root is unique. ``p_error`` is the packet error
    probability of an imperfect channel; leave it at 0 for the core model.
    """
    if N < 1:
        raise ValueError("N must be ≥ 1")
    if not 0.0 <= p_error < 1.0:
        raise ValueError("p_error must be in [0, 1)")
    if N == 1:
        # The exponent N-1 vanishes: f(p) = p - p_e.
        return p_error

    def f(p: float) -> float:
        return collision_residual(params, N, p, p_error)

    lo, hi = f(0.0), f(1.0)
    if lo == 0.0:
        return 0.0
    if hi == 0.0:
        # Only when M = W = 1: every active STA always collides.
        return 1.0
    if lo > 0.0 or hi < 0.0:
        raise SolverError(f"bracket [0, 1] does not enclose a root (f(0)={lo}, f(1)={hi})")

    root, result = optimize.bisect(
        f,
        0.0,
        1.0,
        xtol=1e-300,
        rtol=4 * np.finfo(float).eps,
        maxiter=MAX_BISECTIONS,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        logger.error("Bisection did not converge N=%s params=%s: %s", N, params, result.flag)
        raise SolverError(f"bisection did not converge: {result.flag}")
    residual = f(root)
    if abs(residual) > tol:
        raise SolverError(f"residual |f(p)|={abs(residual):.3e} exceeds tol={tol:.1e}")
    return float(root)


def steady_state(params: ProtocolParams, p: float) -> SteadyState:
    R, W = params.R, params.W
    norm = _backoff_mass(params, p) + 1.0
    pi_active = np.array([_pow(p, r) * (1.0 - p) / norm for r in range(R)])
    pR = _pow(p, R)
    pi_backoff = np.array([(W - w) * pR / (W * norm) for w in range(W)])
    return SteadyState(pi_active=pi_active, pi_backoff=pi_backoff, p=p)


def transition_matrix(params: ProtocolParams, p: float) -> np.ndarray:
    """Row-stochastic one-step matrix of the tagged-STA chain (same state order as SteadyState)."""
    R, W = params.R, params.W
    size = R + W
    P = np.zeros((size, size))
    backoff = R  # index of (R, 0)
    for r in range(R):
        P[r, 0] += 1.0 - p
        if r < R - 1:
            P[r, r + 1] += p
        else:
            P[r, backoff : backoff + W] += p / W
    # (R, 0): success resets, collision redraws the backoff.
    P[backoff, 0] += 1.0 - p
    P[backoff, backoff : backoff + W] += p / W
    for w in range(1, W):
        P[backoff + w, backoff + w - 1] = 1.0
    return P


def success_probability(params: ProtocolParams, N: int, p: float) -> tuple[float, float]:
    tau = activity_probability(params, p)
    p_s = (1.0 - tau / params.M) ** (N - 1)
    p_hat_s = (1.0 - p) * tau
    return p_s, p_hat_s


def efficiency(params: ProtocolParams, N: int, p: float) -> float:
    _, p_hat_s = success_probability(params, N, p)
    return p_hat_s * N / params.M


def approx_efficiency(params: ProtocolParams, N: int, p: float) -> tuple[float, float]:
    x = activity_probability(params, p) * N / params.M
    return math.exp(-x), x * math.exp(-x)


def latency(params: ProtocolParams, p: float) -> float:
    if p >= 1.0:
        return math.inf
    return params.T_BI * ((_backoff_mass(params, p) + p) / (1.0 - p) + params.alpha)


def latency_parts(params: ProtocolParams, p: float) -> tuple[float, float]:
    """Closed forms of the i < R head and the i >= R backoff tail of the latency series."""
    if p >= 1.0:
        return math.inf, math.inf
    R, W, a = params.R, params.W, params.alpha
    pR = _pow(p, R)
    head = (p * pR * (R - 1) - R * pR + p) / (1.0 - p) + (1.0 - pR) * a
    tail = pR * ((W + 1) / (2.0 * (1.0 - p)) + R + a - 1)
    return params.T_BI * head, params.T_BI * tail


def expected_episode_latency(params: ProtocolParams, collisions: int) -> float:
    """Latency of a success that follows ``collisions`` consecutive collisions."""
    R, a = params.R, params.alpha
    if collisions < R:
        return params.T_BI * (collisions + a)
    mean_backoff = (params.W - 1) / 2.0
    return params.T_BI * ((collisions - R + 1) * (mean_backoff + 1) + R - 1 + a)


def latency_series(params: ProtocolParams, p: float, terms: int) -> float:
    total = 0.0
    for i in range(terms + 1):
        weight = (1.0 - p) * _pow(p, i)
        if weight == 0.0:
            break
        total += weight * expected_episode_latency(params, i)
    return total


def report(
    params: ProtocolParams, N: int, tol: float = DEFAULT_TOL, p_error: float = 0.0
) -> AnalyticReport:
    # Every field comes from this single solved p.
    p = solve_collision_probability(params, N, tol=tol, p_error=p_error)
    tau = activity_probability(params, p)
    p_s, p_hat_s = success_probability(params, N, p)
    _, S_hat = approx_efficiency(params, N, p)
    return AnalyticReport(
        N=N,
        M=params.M,
        R=params.R,
        W=params.W,
        p=p,
        tau=tau,
        p_s=p_s,
        p_hat_s=p_hat_s,
        S=p_hat_s * N / params.M,
        S_hat=S_hat,
        D=latency(params, p),
    )


def sweep(
    params: ProtocolParams, points: Iterable[Mapping[str, int]], N: int = 16
) -> list[tuple[dict[str, int], AnalyticReport]]:
    """Report per grid point; points without an N axis use ``N``."""
    out: list[tuple[dict[str, int], AnalyticReport]] = []
    for point in points:
        point_params, net = apply_point(params, NetworkConfig(N=N), dict(point))
        out.append((dict(point), report(point_params, net.N)))
    return out
