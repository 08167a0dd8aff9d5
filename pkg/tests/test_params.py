from __future__ import annotations

import pytest

from abft.domain.params import (
    ConfigError,
    NetworkConfig,
    ProtocolParams,
    StationState,
    validate,
    validate_params,
)


def _codes(exc: ConfigError) -> set[str]:
    return {v.code for v in exc.violations}


def test_defaults_are_valid(defaults: ProtocolParams) -> None:
    params, net = validate(defaults, NetworkConfig())
    assert params is defaults
    assert net.N == 16


def test_alpha_tracks_frame_time(defaults: ProtocolParams) -> None:
    assert defaults.alpha == pytest.approx(16 * 15.8e-6 / 0.1)
    assert defaults.success_time == pytest.approx(16 * 15.8e-6)


def test_zero_slots_rejected() -> None:
    with pytest.raises(ConfigError) as info:
        validate(ProtocolParams(M=0), NetworkConfig())
    assert "M_MIN" in _codes(info.value)
    assert any("M must be ≥ 1" in v.message for v in info.value.violations)


def test_every_violation_is_reported() -> None:
    params = ProtocolParams(M=0, R=25, W=0, T_BI=-1.0)
    net = NetworkConfig(N=0, bi_count=10, warmup_bi=10, seed=-1)
    with pytest.raises(ConfigError) as info:
        validate(params, net)
    assert {
        "M_MIN",
        "W_MIN",
        "R_EXCEEDS_R_MAX",
        "T_BI_POSITIVE",
        "N_MIN",
        "WARMUP_RANGE",
        "SEED_RANGE",
    } <= _codes(info.value)


def test_frame_must_fit_in_beacon_interval() -> None:
    with pytest.raises(ConfigError) as info:
        validate_params(ProtocolParams(F=10_000, T_SSW=1e-3, T_BI=0.1))
    assert _codes(info.value) == {"FRAME_EXCEEDS_BI"}


def test_seed_upper_bound() -> None:
    validate(ProtocolParams(), NetworkConfig(seed=2**64 - 1))
    with pytest.raises(ConfigError) as info:
        validate(ProtocolParams(), NetworkConfig(seed=2**64))
    assert _codes(info.value) == {"SEED_RANGE"}


def test_station_activity() -> None:
    assert StationState().active
    assert not StationState(collisions=8, backoff=3).active
