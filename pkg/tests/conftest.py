from __future__ import annotations

import os

import pytest

from abft.domain.params import NetworkConfig, ProtocolParams

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(REPO_ROOT, "fixtures")


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch) -> None:
    for name in list(os.environ):
        if name.startswith("ABFT_"):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("ABFT_PROGRESS", "0")


@pytest.fixture
def defaults() -> ProtocolParams:
    return ProtocolParams()


@pytest.fixture
def tiny_net() -> NetworkConfig:
    return NetworkConfig(N=4, bi_count=300, run_count=3, seed=7, warmup_bi=50)


@pytest.fixture
def fixtures_dir() -> str:
    return FIXTURES
