from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Config:
    log_level: str
    database_path: str
    artifacts_dir: str

    # Parallelism (worker processes for replications and grid points)
    threads: int

    # Exact joint-chain oracle
    oracle_state_cap: int

    progress: bool

    @staticmethod
    def load() -> "Config":
        def _get_int(name: str, default: int) -> int:
            value = os.getenv(name, str(default))
            try:
                return int(value)
            except ValueError:
                return default

        def _get_bool(name: str, default: bool) -> bool:
            value = os.getenv(name, "1" if default else "0").strip().lower()
            return value in {"1", "true", "yes", "on"}

        return Config(
            log_level=os.getenv("ABFT_LOG_LEVEL", "INFO").upper(),
            database_path=os.getenv("ABFT_DATABASE_PATH", ""),
            artifacts_dir=os.getenv("ABFT_ARTIFACTS_DIR", ""),
            threads=max(1, _get_int("ABFT_THREADS", 1)),
            oracle_state_cap=_get_int("ABFT_ORACLE_STATE_CAP", 4096),
            progress=_get_bool("ABFT_PROGRESS", True),
        )
