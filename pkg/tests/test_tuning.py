from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np
import pytest

from abft.analytic import model
from abft.domain.params import ConfigError, ProtocolParams
from abft.optimize import tuning


def test_relaxed_slot_count_for_single_retry() -> None:
    result = tuning.optimal_slot_count(ProtocolParams(R=1, W=8), 32)
    assert result.M_star_real == pytest.approx(9.96, abs=0.01)
    assert result.M_star_int in (9, 10)


def test_no_backoff_means_one_slot_per_station() -> None:
    for R in (1, 4, 8):
        assert tuning.relaxed_slot_count(ProtocolParams(R=R, W=1), 20) == pytest.approx(20)


def test_relaxed_optimum_hits_one_over_e() -> None:
    for R, W, N in ((1, 8, 32), (3, 5, 17), (8, 8, 16)):
        params = ProtocolParams(R=R, W=W)
        m = tuning.relaxed_slot_count(params, N)
        assert tuning.relaxed_efficiency(params, N, m) == pytest.approx(math.exp(-1), abs=1e-12)


def test_integer_slot_count_picks_better_neighbour() -> None:
    params = ProtocolParams(R=1, W=8)
    result = tuning.optimal_slot_count(params, 32)
    other = 19 - result.M_star_int
    other_rep = model.report(dataclasses.replace(params, M=other), 32)
    assert result.S_hat_at_opt >= other_rep.S_hat


def test_single_station_ties_break_to_smallest() -> None:
    result = tuning.tune(ProtocolParams(R_max=6, W_max=6), 1, 8)
    assert (result.R_star, result.W_star) == (1, 1)
    assert result.S_star == pytest.approx(1 / 8)


def test_search_is_exhaustive() -> None:
    params = ProtocolParams(R_max=10, W_max=12)
    result = tuning.tune(params, 20, 8)
    assert result.S_grid.shape == (10, 12)
    assert np.all(result.S_grid <= result.S_star + 1e-12)
    assert result.S_grid[result.R_star - 1, result.W_star - 1] == pytest.approx(result.S_star)


def test_parallel_grid_matches_serial() -> None:
    params = ProtocolParams(R_max=4, W_max=4)
    serial = tuning.tune(params, 16, 8)
    parallel = tuning.tune(params, 16, 8, workers=2)
    np.testing.assert_array_equal(serial.S_grid, parallel.S_grid)


@pytest.mark.parametrize("N", [28, 30, 32])
def test_retry_limit_drops_to_one_for_eight_slots(N: int) -> None:
    R_star, _ = tuning.optimal_retry_limit(ProtocolParams(), N, 8)
    assert R_star == 1


def test_retry_limit_for_sixteen_slots() -> None:
    R_star, _ = tuning.optimal_retry_limit(ProtocolParams(), 32, 16)
    assert R_star == 3


def test_tuned_against_default_at_eight_slots() -> None:
    row = tuning.compare(ProtocolParams(), 32, 8)
    assert 0.30 <= row.S_gain <= 0.40
    assert 0.23 <= row.D_reduction <= 0.33


def test_tuned_against_default_at_twelve_slots() -> None:
    row = tuning.compare(ProtocolParams(), 32, 12)
    assert 0.12 <= row.S_gain <= 0.22
    assert 0.11 <= row.D_reduction <= 0.21


def test_table_rows_follow_grid_order() -> None:
    params = ProtocolParams(R_max=5, W_max=5)
    table = tuning.build_table(params, [8, 16], [8, 12])
    assert [(r.N, r.M) for r in table.rows] == [(8, 8), (8, 12), (16, 8), (16, 12)]
    cell = tuning.tune(params, 16, 12)
    assert table.lookup(16, 12).R_star == cell.R_star
    assert table.lookup(16, 12).S_star == cell.S_star


def test_non_monotone_retry_limit_is_only_a_warning(caplog: pytest.LogCaptureFixture) -> None:
    rows = [
        tuning.TuningRow(N=8, M=8, R_star=1, W_star=4, S_star=0.3, D_star=0.1),
        tuning.TuningRow(N=16, M=8, R_star=3, W_star=4, S_star=0.3, D_star=0.1),
    ]
    with caplog.at_level(logging.WARNING, logger="abft.optimize"):
        tuning._check_monotone(rows)
    assert "R* increases with N" in caplog.text


def test_bounds_below_template_defaults_are_searchable() -> None:
    params = ProtocolParams(R_max=4, W_max=4)
    R_star, _ = tuning.optimal_retry_limit(params, 32, 8)
    assert 1 <= R_star <= 4
    table = tuning.build_table(params, [32], [8])
    assert table.rows[0].R_star <= 4
    assert table.rows[0].W_star <= 4


def test_search_bounds_are_still_checked() -> None:
    with pytest.raises(ConfigError) as err:
        tuning.tune(ProtocolParams(R_max=0), 8, 8)
    assert [v.code for v in err.value.violations] == ["R_MAX_MIN"]


def test_retry_limit_curve_follows_grid_order() -> None:
    rows = tuning.retry_limit_curve(ProtocolParams(), [24, 32], [8, 16])
    assert [(r.N, r.M) for r in rows] == [(24, 8), (24, 16), (32, 8), (32, 16)]
    assert all(r.W == 8 for r in rows)
    assert [r.R_star for r in rows if r.N == 32] == [1, 3]


def test_compare_reuses_table_row(monkeypatch: pytest.MonkeyPatch) -> None:
    params = ProtocolParams(R_max=5, W_max=5)
    table = tuning.build_table(params, [16], [8])

    def no_search(*args: object, **kwargs: object) -> None:
        raise AssertionError("tune called again")

    monkeypatch.setattr(tuning, "tune", no_search)
    row = tuning.compare(params, 16, 8, tuned=table.rows[0])
    assert (row.R_star, row.W_star, row.S_tuned) == (
        table.rows[0].R_star,
        table.rows[0].W_star,
        table.rows[0].S_star,
    )
    with pytest.raises(ValueError):
        tuning.compare(params, 32, 8, tuned=table.rows[0])
