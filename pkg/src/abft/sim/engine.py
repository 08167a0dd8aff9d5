from __future__ import annotations

"""Per-BI A-BFT contention rules and a single replication loop.

Station state is kept column-wise in numpy arrays so one BI is a handful of
vector operations. Random draws are consumed in a fixed order every BI: one
slot per active station (station-index order), then one backoff per station
that hits the retry limit (station-index order).
"""

import math
from dataclasses import dataclass

import numpy as np

from abft.domain.params import NetworkConfig, ProtocolParams, StationState


@dataclass
class StationTable:
    collisions: np.ndarray
    backoff: np.ndarray
    episode_start: np.ndarray

    @classmethod
    def fresh(cls, N: int, episode_start: int = 0) -> "StationTable":
        return cls(
            collisions=np.zeros(N, dtype=np.int64),
            backoff=np.zeros(N, dtype=np.int64),
            episode_start=np.full(N, episode_start, dtype=np.int64),
        )

    @classmethod
    def from_states(cls, states: list[StationState]) -> "StationTable":
        return cls(
            collisions=np.array([s.collisions for s in states], dtype=np.int64),
            backoff=np.array([s.backoff for s in states], dtype=np.int64),
            episode_start=np.array([s.episode_start_bi for s in states], dtype=np.int64),
        )

    def to_states(self) -> list[StationState]:
        return [
            StationState(collisions=int(r), backoff=int(w), episode_start_bi=int(t))
            for r, w, t in zip(self.collisions, self.backoff, self.episode_start)
        ]

    def joint_state(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(r), int(w)) for r, w in zip(self.collisions, self.backoff))

    def __len__(self) -> int:
        return int(self.collisions.size)


@dataclass(frozen=True)
class BiOutcome:
    # claims[m] lists the stations that picked slot m (0-based), in station order.
    claims: tuple[tuple[int, ...], ...]

    @property
    def winners(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.claims if len(c) == 1)

    @property
    def successes(self) -> int:
        return sum(1 for c in self.claims if len(c) == 1)

    @property
    def collided_slots(self) -> int:
        return sum(1 for c in self.claims if len(c) >= 2)

    @property
    def idle_slots(self) -> int:
        return sum(1 for c in self.claims if not c)


def _draw_backoff(rng: np.random.Generator, count: int, W: int) -> np.ndarray:
    return rng.integers(0, W, size=count)


@dataclass(frozen=True)
class _Contention:
    transmitters: np.ndarray
    slots: np.ndarray
    winners: np.ndarray
    winner_starts: np.ndarray
    collided_slots: int


def _contend(
    table: StationTable, params: ProtocolParams, rng: np.random.Generator, bi_index: int
) -> _Contention:
    """Apply one BI of the protocol to ``table`` in place."""
    active = table.backoff == 0
    table.backoff[~active] -= 1

    transmitters = np.flatnonzero(active)
    slots = rng.integers(0, params.M, size=transmitters.size)
    counts = np.bincount(slots, minlength=params.M)
    alone = counts[slots] == 1
    winners = transmitters[alone]
    losers = transmitters[~alone]

    winner_starts = table.episode_start[winners].copy()
    table.collisions[winners] = 0
    table.episode_start[winners] = bi_index + 1

    below_limit = table.collisions[losers] < params.R - 1
    table.collisions[losers[below_limit]] += 1
    # Reaching R and already sitting at R both (re)draw a backoff.
    at_limit = losers[~below_limit]
    table.collisions[at_limit] = params.R
    table.backoff[at_limit] = _draw_backoff(rng, at_limit.size, params.W)

    return _Contention(
        transmitters=transmitters,
        slots=slots,
        winners=winners,
        winner_starts=winner_starts,
        collided_slots=int(np.count_nonzero(counts >= 2)),
    )


def step_bi(
    stations: list[StationState],
    params: ProtocolParams,
    rng: np.random.Generator,
    bi_index: int = 0,
) -> tuple[BiOutcome, list[StationState]]:
    table = StationTable.from_states(stations)
    c = _contend(table, params, rng, bi_index)
    claims: list[list[int]] = [[] for _ in range(params.M)]
    for station, slot in zip(c.transmitters, c.slots):
        claims[int(slot)].append(int(station))
    return BiOutcome(claims=tuple(tuple(s) for s in claims)), table.to_states()


@dataclass(frozen=True)
class ReplicationMetrics:
    p_hat_s: float
    S: float
    D: float  # nan when no episode completed inside the measured window
    collisions_per_bi: float
    tau: float
    p: float
    episodes: int
    successes: int
    attempts: int


@dataclass
class _Tally:
    successes: int = 0
    collided_slots: int = 0
    attempts: int = 0
    collided_attempts: int = 0
    latency_bis: int = 0
    episodes: int = 0


def run_replication(
    params: ProtocolParams, net: NetworkConfig, rng: np.random.Generator
) -> tuple[ReplicationMetrics, StationTable]:
    """One run of ``bi_count`` BIs from the all-(0,0) state; only BIs >= warmup are measured.

    An episode counts toward latency iff it starts at or after the first
    measured BI and ends in a success before the run ends.
    """
    table = StationTable.fresh(net.N, episode_start=net.warmup_bi)
    tally = _Tally()
    for t in range(net.bi_count):
        c = _contend(table, params, rng, t)
        if t < net.warmup_bi:
            continue
        tally.successes += int(c.winners.size)
        tally.collided_slots += c.collided_slots
        tally.attempts += int(c.transmitters.size)
        tally.collided_attempts += int(c.transmitters.size - c.winners.size)
        counted = c.winner_starts[c.winner_starts >= net.warmup_bi]
        tally.episodes += int(counted.size)
        tally.latency_bis += int((t - counted).sum())

    measured = net.measured_bi
    if tally.episodes:
        D = tally.latency_bis / tally.episodes * params.T_BI + params.success_time
    else:
        D = math.nan
    metrics = ReplicationMetrics(
        p_hat_s=tally.successes / (net.N * measured),
        S=tally.successes / (params.M * measured),
        D=D,
        collisions_per_bi=tally.collided_slots / measured,
        tau=tally.attempts / (net.N * measured),
        p=tally.collided_attempts / tally.attempts if tally.attempts else math.nan,
        episodes=tally.episodes,
        successes=tally.successes,
        attempts=tally.attempts,
    )
    return metrics, table
