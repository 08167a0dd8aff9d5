from __future__ import annotations

import dataclasses

import pytest

from abft.config import Config
from abft.worker.pool import ordered_map


def _square(x: int) -> int:
    return x * x


def _explode(x: int) -> int:
    if x == 3:
        raise RuntimeError("boom")
    return x


def test_ordered_map_keeps_input_order() -> None:
    items = list(range(12))
    assert ordered_map(_square, items) == [x * x for x in items]
    assert ordered_map(_square, items, workers=3) == [x * x for x in items]


def test_worker_failure_propagates() -> None:
    with pytest.raises(RuntimeError, match="boom"):
        ordered_map(_explode, list(range(6)), workers=2)


def test_config_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ABFT_THREADS", "4")
    monkeypatch.setenv("ABFT_ORACLE_STATE_CAP", "not-a-number")
    monkeypatch.setenv("ABFT_PROGRESS", "off")
    cfg = Config.load()
    assert cfg.threads == 4
    assert cfg.oracle_state_cap == 4096
    assert cfg.progress is False
    assert cfg.database_path == ""


def test_threads_never_below_one(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ABFT_THREADS", "0")
    assert Config.load().threads == 1


def test_config_fields_are_all_abft_settings() -> None:
    names = {f.name for f in dataclasses.fields(Config)}
    assert names == {
        "log_level",
        "database_path",
        "artifacts_dir",
        "threads",
        "oracle_state_cap",
        "progress",
    }
