from __future__ import annotations

"""Per-run artifacts: ``run-<id>/events.jsonl`` and ``run-<id>/transcript.md``.

An empty artifacts dir turns every call into a no-op.
"""

import json
import os
from datetime import datetime, timezone
from typing import Any


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunLogger:
    def __init__(self, run_id: int | str, artifacts_dir: str) -> None:
        self.run_id = run_id
        self.enabled = bool(artifacts_dir)
        self.dir = os.path.join(artifacts_dir, f"run-{run_id}") if self.enabled else ""
        if self.enabled:
            os.makedirs(self.dir, exist_ok=True)

    @property
    def events_path(self) -> str:
        return os.path.join(self.dir, "events.jsonl")

    @property
    def transcript_path(self) -> str:
        return os.path.join(self.dir, "transcript.md")

    def event(self, kind: str, message: str, data: dict[str, Any] | None = None) -> None:
        if not self.enabled:
            return
        record = {"ts": _utcnow(), "kind": kind, "message": message, "data": data or {}}
        with open(self.events_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, ensure_ascii=True, default=str) + "\n")

    def section(self, title: str, body: str) -> None:
        if not self.enabled:
            return
        with open(self.transcript_path, "a", encoding="utf-8") as f:
            f.write(f"## {title}\n\n{body.rstrip()}\n\n")
