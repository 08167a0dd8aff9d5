from __future__ import annotations

import json
import os

import pytest

from abft.artifacts.run_log import RunLogger
from abft.storage import db


def test_run_lifecycle(tmp_path) -> None:
    conn = db.connect(str(tmp_path / "nested" / "ledger.db"))
    db.init_db(conn)
    db.init_db(conn)
    run_id = db.start_run(conn, command="simulate", config={"network": {"N": 4}}, seed=2**64 - 1)
    run = db.get_run(conn, run_id)
    assert run is not None
    assert (run.status, run.seed, run.config) == ("running", 2**64 - 1, {"network": {"N": 4}})

    db.update_run_status(conn, run_id, "failed", error="boom")
    other = db.start_run(conn, command="analytic", config={})
    db.update_run_status(conn, other, "done")

    assert [r.id for r in db.list_runs(conn)] == [run_id, other]
    failed = list(db.list_runs(conn, status="failed"))
    assert [(r.command, r.error) for r in failed] == [("simulate", "boom")]
    assert db.get_run(conn, 999) is None


@pytest.mark.parametrize("seed", [0, 2**63 - 1, 2**63, 2**64 - 2, 2**64 - 1])
def test_seed_survives_the_ledger(tmp_path, seed: int) -> None:
    conn = db.connect(str(tmp_path / "ledger.db"))
    db.init_db(conn)
    run_id = db.start_run(conn, command="simulate", config={}, seed=seed)
    run = db.get_run(conn, run_id)
    assert run is not None
    assert run.seed == seed
    stored = conn.execute("SELECT typeof(seed) FROM runs WHERE id = ?", (run_id,)).fetchone()
    assert stored[0] == "text"


def test_run_logger_writes_events_and_transcript(tmp_path) -> None:
    log = RunLogger(3, str(tmp_path))
    log.event("run_start", "started", {"seed": 1})
    log.section("Resolved config", "[network]\nN = 4\n")
    assert os.path.basename(log.dir) == "run-3"
    with open(log.events_path, encoding="utf-8") as f:
        record = json.loads(f.readline())
    assert (record["kind"], record["data"]) == ("run_start", {"seed": 1})
    with open(log.transcript_path, encoding="utf-8") as f:
        assert f.read().startswith("## Resolved config\n\n[network]")


def test_run_logger_disabled_without_dir(tmp_path) -> None:
    log = RunLogger(1, "")
    log.event("x", "y")
    log.section("t", "b")
    assert not log.enabled
    assert os.listdir(tmp_path) == []
