from __future__ import annotations

"""SQLite ledger of CLI invocations.

One row per command run: what was asked (command, seed, resolved config),
where the output went, and how it ended. The ledger is bookkeeping only and
never feeds back into results.
"""

import json
import os
import sqlite3
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Iterable


@dataclass(frozen=True)
class Run:
    id: int
    created_at: str
    updated_at: str
    command: str
    status: str
    seed: int | None
    config: dict[str, Any]
    output_path: str | None
    error: str | None


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def connect(db_path: str) -> sqlite3.Connection:
    if db_path != ":memory:":
        _ensure_parent(db_path)
    conn = sqlite3.connect(db_path)
    conn.row_factory = sqlite3.Row
    return conn


def init_db(conn: sqlite3.Connection) -> None:
    # config is the fully resolved experiment (file + preset + overrides) as JSON text.
    conn.execute(
        """
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            created_at TEXT NOT NULL,
            updated_at TEXT NOT NULL,
            command TEXT NOT NULL,
            status TEXT NOT NULL,
            seed TEXT,
            config TEXT NOT NULL,
            output_path TEXT,
            error TEXT
        )
        """
    )
    conn.commit()


def start_run(
    conn: sqlite3.Connection,
    *,
    command: str,
    config: dict[str, Any],
    seed: int | None = None,
    output_path: str | None = None,
) -> int:
    now = _utcnow()
    cur = conn.execute(
        """
        INSERT INTO runs (created_at, updated_at, command, status, seed, config, output_path)
        VALUES (?, ?, ?, ?, ?, ?, ?)
        """,
        (
            now,
            now,
            command,
            "running",
            # Text: SQLite integers are signed 64-bit and seeds span the full u64 range.
            None if seed is None else str(seed),
            json.dumps(config, ensure_ascii=True, sort_keys=True),
            output_path,
        ),
    )
    conn.commit()
    return int(cur.lastrowid)


def update_run_status(
    conn: sqlite3.Connection, run_id: int, status: str, error: str | None = None
) -> None:
    conn.execute(
        """
        UPDATE runs
        SET status = ?, updated_at = ?, error = ?
        WHERE id = ?
        """,
        (status, _utcnow(), error, run_id),
    )
    conn.commit()


def _row_to_run(row: sqlite3.Row) -> Run:
    seed = row["seed"]
    return Run(
        id=row["id"],
        created_at=row["created_at"],
        updated_at=row["updated_at"],
        command=row["command"],
        status=row["status"],
        seed=int(seed) if seed is not None else None,
        config=json.loads(row["config"]),
        output_path=row["output_path"],
        error=row["error"],
    )


def list_runs(conn: sqlite3.Connection, status: str | None = None) -> Iterable[Run]:
    if status:
        cur = conn.execute("SELECT * FROM runs WHERE status = ? ORDER BY id ASC", (status,))
    else:
        cur = conn.execute("SELECT * FROM runs ORDER BY id ASC")
    for row in cur.fetchall():
        yield _row_to_run(row)


def get_run(conn: sqlite3.Connection, run_id: int) -> Run | None:
    row = conn.execute("SELECT * FROM runs WHERE id = ?", (run_id,)).fetchone()
    if row is None:
        return None
    return _row_to_run(row)
