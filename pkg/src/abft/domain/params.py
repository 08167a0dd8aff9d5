from __future__ import annotations

"""Protocol and network parameters shared by every other package.

Defaults are the 802.11ad settings used throughout the evaluation:
M=8 A-BFT slots, retry limit R=8, contention window W=8, F=16 SSW frames
per slot, 100 ms beacon interval and 15.8 us SSW frames.
"""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ProtocolParams:
    M: int = 8
    R: int = 8  # dot11RSSRetryLimit
    W: int = 8  # dot11RSSBackoff
    F: int = 16  # FSS
    T_BI: float = 0.1
    T_SSW: float = 15.8e-6
    R_max: int = 20
    W_max: int = 20

    @property
    def alpha(self) -> float:
        # Computed on demand so it can never drift from F, T_SSW and T_BI.
        return self.F * self.T_SSW / self.T_BI

    @property
    def success_time(self) -> float:
        return self.F * self.T_SSW


@dataclass(frozen=True)
class NetworkConfig:
    N: int = 16
    bi_count: int = 10_000
    run_count: int = 1000
    seed: int = 0
    warmup_bi: int = 500

    @property
    def measured_bi(self) -> int:
        return self.bi_count - self.warmup_bi


@dataclass(frozen=True)
class StationState:
    collisions: int = 0
    backoff: int = 0
    episode_start_bi: int = 0

    @property
    def active(self) -> bool:
        return self.backoff == 0


@dataclass(frozen=True)
class Violation:
    code: str
    field: str
    message: str

    def as_dict(self) -> dict[str, str]:
        return {"code": self.code, "field": self.field, "message": self.message}


class ConfigError(ValueError):
    def __init__(self, violations: list[Violation]) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations) or "invalid configuration")


_SEED_LIMIT = 2**64


def protocol_violations(params: ProtocolParams) -> list[Violation]:
    out: list[Violation] = []
    for name in ("M", "R", "W", "F"):
        value = getattr(params, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            out.append(Violation(f"{name}_MIN", name, f"{name} must be ≥ 1"))
    for name in ("R_max", "W_max"):
        value = getattr(params, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            out.append(Violation(f"{name.upper()}_MIN", name, f"{name} must be ≥ 1"))
    if not params.T_BI > 0:
        out.append(Violation("T_BI_POSITIVE", "T_BI", "T_BI must be > 0"))
    if not params.T_SSW > 0:
        out.append(Violation("T_SSW_POSITIVE", "T_SSW", "T_SSW must be > 0"))
    if params.T_BI > 0 and params.T_SSW > 0 and isinstance(params.F, int) and params.F >= 1:
        if not params.F * params.T_SSW < params.T_BI:
            out.append(
                Violation("FRAME_EXCEEDS_BI", "F", "F·T_SSW must be shorter than T_BI")
            )
    if isinstance(params.R, int) and isinstance(params.R_max, int) and params.R > params.R_max:
        out.append(Violation("R_EXCEEDS_R_MAX", "R", "R exceeds R_max"))
    if isinstance(params.W, int) and isinstance(params.W_max, int) and params.W > params.W_max:
        out.append(Violation("W_EXCEEDS_W_MAX", "W", "W exceeds W_max"))
    return out


def network_violations(net: NetworkConfig) -> list[Violation]:
    out: list[Violation] = []
    if net.N < 1:
        out.append(Violation("N_MIN", "N", "N must be ≥ 1"))
    if net.bi_count < 1:
        out.append(Violation("BI_COUNT_MIN", "bi_count", "bi_count must be ≥ 1"))
    if net.run_count < 1:
        out.append(Violation("RUN_COUNT_MIN", "run_count", "run_count must be ≥ 1"))
    if net.warmup_bi < 0 or net.warmup_bi >= net.bi_count:
        out.append(
            Violation("WARMUP_RANGE", "warmup_bi", "warmup_bi must be in [0, bi_count)")
        )
    if not 0 <= net.seed < _SEED_LIMIT:
        out.append(Violation("SEED_RANGE", "seed", "seed must be an unsigned 64-bit integer"))
    return out


def validate(
    params: ProtocolParams, net: NetworkConfig
) -> tuple[ProtocolParams, NetworkConfig]:
    """Return the configuration unchanged, or raise ConfigError listing every violation."""
    violations = protocol_violations(params) + network_violations(net)
    if violations:
        raise ConfigError(violations)
    return params, net


def validate_params(params: ProtocolParams) -> ProtocolParams:
    violations = protocol_violations(params)
    if violations:
        raise ConfigError(violations)
    return params


_TEMPLATE_CODES = frozenset({"R_EXCEEDS_R_MAX", "W_EXCEEDS_W_MAX"})


def validate_search_bounds(params: ProtocolParams) -> ProtocolParams:
    """Like validate_params, but R and W may lie outside [1, R_max] x [1, W_max].

    The optimizer only reads the bounds; the template's own R and W are the
    default it is compared against.
    """
    violations = [v for v in protocol_violations(params) if v.code not in _TEMPLATE_CODES]
    if violations:
        raise ConfigError(violations)
    return params


@dataclass(frozen=True)
class SweepAxes:
    """Grid axes; an empty axis means "keep the template value"."""

    N: tuple[int, ...] = ()
    M: tuple[int, ...] = ()
    R: tuple[int, ...] = ()
    W: tuple[int, ...] = ()

    def is_empty(self) -> bool:
        return not (self.N or self.M or self.R or self.W)


@dataclass(frozen=True)
class ValidateSettings:
    balance_tol: float = 1e-10
    latency_rel_tol: float = 1e-6
    confidence: float = 0.99
    oracle_runs: int = 200
    oracle_bis: int = 5000
    oracle_warmup_bi: int = 100
    random_cases: int = 100


@dataclass(frozen=True)
class Experiment:
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    sweep: SweepAxes = field(default_factory=SweepAxes)
    validate: ValidateSettings = field(default_factory=ValidateSettings)
