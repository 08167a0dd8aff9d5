from __future__ import annotations

import json
import os

import pytest

from abft.cli.main import main

SMALL_SIM = ["--set", "bi_count=300", "--set", "run_count=3", "--set", "warmup_bi=50"]


def test_analytic_single_station(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["analytic", "--set", "N=1", "--format", "json"]) == 0
    records = json.loads(capsys.readouterr().out)
    p = next(r for r in records if r["metric"] == "p")
    assert p["value"] == 0.0


def test_analytic_grid_from_overrides(tmp_path) -> None:
    out = tmp_path / "grid.csv"
    grid = ["--set", "sweep.N=[4,32]", "--set", "sweep.M=[8,16]"]
    code = main(["analytic", *grid, "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 4 * 7
    assert lines[1].startswith("4,8,8,8,p,")


def test_simulate_is_byte_identical_per_seed(tmp_path) -> None:
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert main(["simulate", *SMALL_SIM, "--seed", "42", "--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config_file_and_preset(tmp_path, fixtures_dir: str) -> None:
    out = tmp_path / "sweep.csv"
    config = os.path.join(fixtures_dir, "configs", "retry_limit.toml")
    code = main(
        [
            "sweep",
            "--config",
            config,
            "--preset",
            "desk",
            *SMALL_SIM,
            "--set",
            "sweep.N=[8]",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    metrics = {line.split(",")[4] for line in out.read_text().splitlines()[1:]}
    assert {"analytic_S", "sim_S", "sim_D"} <= metrics


def test_config_error_exit_code(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["analytic", "--set", "M=0"]) == 1
    assert "M_MIN" in capsys.readouterr().err


def test_unknown_override_exit_code() -> None:
    assert main(["analytic", "--set", "slots=8"]) == 1


def test_missing_config_is_io_error(tmp_path) -> None:
    assert main(["analytic", "--config", str(tmp_path / "missing.toml")]) == 2


def test_validate_selected_suites(tmp_path) -> None:
    out = tmp_path / "report.json"
    code = main(["validate", "--suite", "balance", "--suite", "latency_series", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert [s["name"] for s in report["suites"]] == ["balance", "latency_series"]


def test_validate_failure_exit_code(monkeypatch: pytest.MonkeyPatch, tmp_path) -> None:
    from abft.validation import suites

    def failing(exp):
        result = suites.SuiteResult("balance")
        result.failures.append({"reason": "forced"})
        return result

    monkeypatch.setitem(suites.SUITES, "balance", failing)
    assert main(["validate", "--suite", "balance", "--out", str(tmp_path / "r.json")]) == 4


def test_optimize_writes_table_and_comparison(tmp_path) -> None:
    out = tmp_path / "table.csv"
    code = main(
        ["optimize", "--set", "sweep.N=[32]", "--set", "sweep.M=[8]", "--out", str(out)]
    )
    assert code == 0
    assert out.read_text().splitlines()[0] == "N,M,R_star,W_star,S_star,D_star"
    comparison = (tmp_path / "table.comparison.csv").read_text().splitlines()
    assert comparison[0].startswith("N,M,R_default")
    assert len(comparison) == 2
    r_star = (tmp_path / "table.r_star.csv").read_text().splitlines()
    assert r_star[0] == "N,M,W,R_star,S_star"
    assert r_star[1].startswith("32,8,8,1,")


def test_optimize_to_stdout_separates_tables(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["optimize", "--set", "sweep.N=[32]", "--set", "sweep.M=[8]"]) == 0
    blocks = capsys.readouterr().out.split("\n\n")
    assert [b.splitlines()[0].split(",")[:3] for b in blocks] == [
        ["N", "M", "R_star"],
        ["N", "M", "R_default"],
        ["N", "M", "W"],
    ]


def test_ledger_and_artifacts(monkeypatch: pytest.MonkeyPatch, tmp_path, capsys) -> None:
    monkeypatch.setenv("ABFT_DATABASE_PATH", str(tmp_path / "runs.db"))
    monkeypatch.setenv("ABFT_ARTIFACTS_DIR", str(tmp_path / "artifacts"))
    assert main(["analytic", "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["analytic", "--set", "M=0"]) == 1
    capsys.readouterr()

    assert main(["runs"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    assert [(r[0], r[2], r[3]) for r in rows] == [("1", "analytic", "done")]

    run_dir = tmp_path / "artifacts" / "run-1"
    events = (run_dir / "events.jsonl").read_text().splitlines()
    kinds = [json.loads(line)["kind"] for line in events]
    assert kinds[0] == "run_start"
    assert kinds[-1] == "run_done"
    assert "## Resolved config" in (run_dir / "transcript.md").read_text()


def test_runs_without_ledger() -> None:
    assert main(["runs"]) == 1
