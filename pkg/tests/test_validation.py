from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from abft.domain.params import Experiment, ValidateSettings
from abft.sim import engine
from abft.validation import suites


def _quick(**overrides: float) -> Experiment:
    settings = ValidateSettings(oracle_runs=40, oracle_bis=1500, oracle_warmup_bi=100)
    return Experiment(validate=dataclasses.replace(settings, **overrides))


def test_deterministic_suites_pass() -> None:
    report = suites.run_suites(Experiment(), names=["fixed_point", "balance", "latency_series"])
    assert report.passed, report.as_dict()
    checked = {s.name: s.checked for s in report.suites}
    assert checked["fixed_point"] == 29 * 3 * 8 * 16
    assert checked["balance"] == 100


def test_tightened_balance_tolerance_still_passes() -> None:
    result = suites.check_balance(_quick(balance_tol=1e-10, random_cases=25))
    assert result.passed


def test_symmetry_suite_passes() -> None:
    result = suites.check_symmetry()
    assert result.passed
    assert result.checked == sum(1 for inst in suites.ORACLE_INSTANCES if inst[0] >= 2)


@pytest.mark.slow
def test_simulator_matches_exact_chain() -> None:
    result = suites.check_oracle(_quick())
    assert result.passed, result.failures
    assert result.checked == len(suites.ORACLE_INSTANCES) >= 8


def test_mutated_backoff_rule_is_caught(monkeypatch: pytest.MonkeyPatch) -> None:
    def always_last(rng: np.random.Generator, count: int, W: int) -> np.ndarray:
        return np.full(count, W - 1, dtype=np.int64)

    monkeypatch.setattr(engine, "_draw_backoff", always_last)
    result = suites.check_oracle(
        _quick(oracle_runs=10, oracle_bis=400), instances=[(2, 1, 1, 2)]
    )
    assert not result.passed
    assert result.failures[0]["check"] == "success_probability"


def test_pooled_chisquare_flags_impossible_states() -> None:
    observed = np.array([10.0, 0.0, 3.0])
    expected = np.array([13.0, 0.0, 0.0])
    p_value, _ = suites._pooled_chisquare(observed, expected)
    assert p_value == 0.0


def test_pooled_chisquare_needs_two_bins() -> None:
    assert suites._pooled_chisquare(np.array([20.0]), np.array([20.0])) is None


def test_unknown_suite_name() -> None:
    with pytest.raises(ValueError):
        suites.run_suites(Experiment(), names=["nope"])
