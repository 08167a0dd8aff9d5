from __future__ import annotations

"""Exact joint Markov chain over all N stations, for tiny instances.

The protocol rules are re-derived here from scratch with plain Python
enumeration and do not reuse the simulator code: the chain is the ground
truth the simulator is checked against.

Per-station states are ordered (0,0), (1,0), ..., (R-1,0), (R,0), ...,
(R,W-1); joint states are N-tuples of those, indexed lexicographically with
station 0 most significant.
"""

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from abft.domain.params import ProtocolParams, validate_params

logger = logging.getLogger("abft.oracle")

DEFAULT_STATE_CAP = 4096
STATIONARY_TOL = 1e-13
MAX_ITERATIONS = 200_000


class StateSpaceError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


Local = tuple[int, int]


def local_states(params: ProtocolParams) -> list[Local]:
    return [(r, 0) for r in range(params.R)] + [(params.R, w) for w in range(params.W)]


@dataclass(frozen=True)
class JointChain:
    params: ProtocolParams
    N: int
    local: tuple[Local, ...]
    matrix: sparse.csr_matrix
    # success_dist[s, k]: probability of exactly k successful slots in a BI started in state s.
    success_dist: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def index_of(self, joint: tuple[Local, ...]) -> int:
        base = len(self.local)
        position = {state: i for i, state in enumerate(self.local)}
        index = 0
        for station in joint:
            index = index * base + position[station]
        return index

    def state_at(self, index: int) -> tuple[Local, ...]:
        base = len(self.local)
        digits = []
        for _ in range(self.N):
            index, d = divmod(index, base)
            digits.append(self.local[d])
        return tuple(reversed(digits))

    @property
    def expected_successes(self) -> np.ndarray:
        return self.success_dist @ np.arange(self.success_dist.shape[1])


def _after_collision(params: ProtocolParams, state: Local) -> list[Local]:
    """Possible next states of a station whose transmission collided (equiprobable)."""
    r, _ = state
    if r < params.R - 1:
        return [(r + 1, 0)]
    return [(params.R, w) for w in range(params.W)]


def _transitions(
    params: ProtocolParams, joint: tuple[Local, ...]
) -> tuple[dict[tuple[Local, ...], float], Counter]:
    active = [i for i, (_, w) in enumerate(joint) if w == 0]
    base = [(r, w - 1) if w > 0 else None for r, w in joint]
    assignment_prob = 1.0 / params.M ** len(active)

    dest: dict[tuple[Local, ...], float] = defaultdict(float)
    successes: Counter = Counter()
    for slots in itertools.product(range(params.M), repeat=len(active)):
        claims = Counter(slots)
        options: list[list[Local]] = []
        won = 0
        for i, station in enumerate(joint):
            if base[i] is not None:
                options.append([base[i]])
                continue
            slot = slots[active.index(i)]
            if claims[slot] == 1:
                won += 1
                options.append([(0, 0)])
            else:
                options.append(_after_collision(params, station))
        successes[won] += assignment_prob
        branches = 1
        for o in options:
            branches *= len(o)
        for combo in itertools.product(*options):
            dest[combo] += assignment_prob / branches
    return dest, successes


def build(params: ProtocolParams, N: int, state_cap: int = DEFAULT_STATE_CAP) -> JointChain:
    validate_params(params)
    if N < 1:
        raise ValueError("N must be ≥ 1")
    local = local_states(params)
    size = len(local) ** N
    if size > state_cap:
        raise StateSpaceError(
            f"joint state space (R+W)^N = {size} exceeds the cap of {state_cap}"
        )

    max_successes = min(N, params.M)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    success_dist = np.zeros((size, max_successes + 1))
    chain_index = {joint: i for i, joint in enumerate(itertools.product(local, repeat=N))}
    for joint, i in chain_index.items():
        dest, successes = _transitions(params, joint)
        for target, prob in dest.items():
            rows.append(i)
            cols.append(chain_index[target])
            vals.append(prob)
        for k, prob in successes.items():
            success_dist[i, k] = prob

    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    matrix.sum_duplicates()
    logger.info(
        "Built joint chain N=%s M=%s R=%s W=%s: %s states", N, params.M, params.R, params.W, size
    )
    return JointChain(
        params=params,
        N=N,
        local=tuple(local),
        matrix=matrix,
        success_dist=success_dist,
    )


def stationary(
    chain: JointChain, tol: float = STATIONARY_TOL, max_iterations: int = MAX_ITERATIONS
) -> np.ndarray:
    """Stationary vector by power iteration on the lazy chain (I + P) / 2.

    The lazy chain has the same stationary vector as P and is aperiodic, so
    deterministic backoff countdowns cannot make the iteration oscillate.
    Stops once max |pi P - pi| < tol.
    """
    PT = chain.matrix.transpose().tocsr()
    x = np.full(chain.size, 1.0 / chain.size)
    for iteration in range(max_iterations):
        y = PT @ x
        if np.max(np.abs(y - x)) < tol:
            logger.debug("Power iteration converged after %s steps", iteration)
            return x
        x = 0.5 * (x + y)
        x /= x.sum()
    raise ConvergenceError(
        f"power iteration did not reach {tol:.0e} within {max_iterations} iterations"
    )


@dataclass(frozen=True)
class ExactMetrics:
    pi: np.ndarray
    expected_successes: float
    p_hat_s: float
    S: float
    success_distribution: np.ndarray


def exact_metrics(chain: JointChain, params: ProtocolParams | None = None) -> ExactMetrics:
    params = params or chain.params
    pi = stationary(chain)
    expected = float(pi @ chain.expected_successes)
    return ExactMetrics(
        pi=pi,
        expected_successes=expected,
        p_hat_s=expected / chain.N,
        S=expected / params.M,
        success_distribution=pi @ chain.success_dist,
    )
