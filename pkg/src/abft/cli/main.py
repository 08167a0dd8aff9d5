from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from typing import Callable

from abft.analytic import model
from abft.artifacts.run_log import RunLogger
from abft.config import Config
from abft.domain.experiment import (
    PRESETS,
    apply_overrides,
    apply_preset,
    check_experiment,
    dumps_experiment,
    experiment_as_dict,
    grid_points,
    load_experiment,
)
from abft.domain.params import ConfigError, Experiment
from abft.optimize import tuning
from abft.oracle.joint_chain import ConvergenceError, StateSpaceError
from abft.reporting import export
from abft.sim import runner
from abft.storage import db
from abft.validation.suites import SUITES, run_suites
from abft.worker.pool import configure_logging

logger = logging.getLogger("abft.cli")

EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

Command = Callable[[argparse.Namespace, Experiment, Config, RunLogger], int]


def _resolve_experiment(args: argparse.Namespace) -> Experiment:
    exp = load_experiment(args.config) if args.config else check_experiment(Experiment())
    exp = apply_preset(exp, args.preset)
    exp = apply_overrides(exp, args.overrides or [])
    if args.seed is not None:
        network = dataclasses.replace(exp.network, seed=args.seed)
        exp = check_experiment(dataclasses.replace(exp, network=network))
    return exp


def _companion_path(out: str | None, suffix: str, fmt: str) -> str | None:
    if out in (None, "-"):
        return None
    stem, _ = os.path.splitext(out)
    return f"{stem}.{suffix}.{fmt}"


def _cmd_analytic(
    args: argparse.Namespace, exp: Experiment, cfg: Config, run_log: RunLogger
) -> int:
    results = model.sweep(exp.protocol, grid_points(exp.sweep), N=exp.network.N)
    export.write(export.analytic_frame(results), args.out, args.format)
    run_log.event("output", "Analytic report written", {"points": len(results)})
    return 0


def _cmd_simulate(
    args: argparse.Namespace, exp: Experiment, cfg: Config, run_log: RunLogger
) -> int:
    results = runner.sweep(
        exp.protocol,
        exp.network,
        grid_points(exp.sweep),
        workers=cfg.threads,
        progress=cfg.progress,
    )
    export.write(export.sim_frame(results), args.out, args.format)
    run_log.event("output", "Simulation report written", {"points": len(results)})
    return 0


def _cmd_sweep(
    args: argparse.Namespace, exp: Experiment, cfg: Config, run_log: RunLogger
) -> int:
    points = grid_points(exp.sweep)
    analytic = model.sweep(exp.protocol, points, N=exp.network.N)
    sim = runner.sweep(
        exp.protocol, exp.network, points, workers=cfg.threads, progress=cfg.progress
    )
    export.write(export.sweep_frame(analytic, sim), args.out, args.format)
    run_log.event("output", "Sweep written", {"points": len(points)})
    return 0


def _cmd_validate(
    args: argparse.Namespace, exp: Experiment, cfg: Config, run_log: RunLogger
) -> int:
    report = run_suites(
        exp, names=args.suites, workers=cfg.threads, state_cap=cfg.oracle_state_cap
    )
    text = json.dumps(report.as_dict(), indent=2, default=float) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    run_log.section("Validation", text)
    if not report.passed:
        failed = [s.name for s in report.suites if not s.passed]
        logger.error("Validation failed: %s", ", ".join(failed))
        return EXIT_VALIDATION
    return 0


def _cmd_optimize(
    args: argparse.Namespace, exp: Experiment, cfg: Config, run_log: RunLogger
) -> int:
    Ns = exp.sweep.N or (exp.network.N,)
    Ms = exp.sweep.M or (exp.protocol.M,)
    table = tuning.build_table(exp.protocol, Ns, Ms, workers=cfg.threads, progress=cfg.progress)
    comparisons = [tuning.compare(exp.protocol, row.N, row.M, tuned=row) for row in table.rows]
    r_star = tuning.retry_limit_curve(exp.protocol, Ns, Ms, workers=cfg.threads)

    comparison_path = _companion_path(args.out, "comparison", args.format)
    r_star_path = _companion_path(args.out, "r_star", args.format)
    export.write(export.tuning_frame(table), args.out, args.format)
    # On stdout the three tables follow each other, separated by a blank line.
    if comparison_path is None:
        sys.stdout.write("\n")
    export.write(export.comparison_frame(comparisons), comparison_path, args.format)
    if r_star_path is None:
        sys.stdout.write("\n")
    export.write(export.retry_limit_frame(r_star), r_star_path, args.format)
    run_log.event(
        "output",
        "Tuning table written",
        {
            "cells": len(table.rows),
            "comparison": comparison_path or "stdout",
            "r_star": r_star_path or "stdout",
        },
    )
    return 0


def _cmd_runs(args: argparse.Namespace) -> int:
    cfg = Config.load()
    if not cfg.database_path:
        print("Run ledger disabled: set ABFT_DATABASE_PATH", file=sys.stderr)
        return EXIT_CONFIG
    conn = db.connect(cfg.database_path)
    db.init_db(conn)
    for run in db.list_runs(conn, status=args.status):
        fields = [
            str(run.id),
            run.created_at,
            run.command,
            run.status,
            "" if run.seed is None else str(run.seed),
            run.output_path or "-",
            run.error or "",
        ]
        print("\t".join(fields))
    return 0


def _execute(command: str, body: Command) -> Callable[[argparse.Namespace], int]:
    def handler(args: argparse.Namespace) -> int:
        cfg = Config.load()
        exp = _resolve_experiment(args)

        conn = None
        run_id: int | str = time.strftime("%Y%m%dT%H%M%S") + f"-{os.getpid()}"
        if cfg.database_path:
            conn = db.connect(cfg.database_path)
            db.init_db(conn)
            run_id = db.start_run(
                conn,
                command=command,
                config=experiment_as_dict(exp),
                seed=exp.network.seed,
                output_path=args.out,
            )
        run_log = RunLogger(run_id, cfg.artifacts_dir)
        run_log.section("Resolved config", dumps_experiment(exp))
        run_log.event("run_start", f"{command} started", {"seed": exp.network.seed})
        logger.info("Run start id=%s command=%s seed=%s", run_id, command, exp.network.seed)
        try:
            code = body(args, exp, cfg, run_log)
        except Exception as exc:  # noqa: BLE001
            if conn is not None:
                db.update_run_status(conn, int(run_id), "failed", error=str(exc))
            run_log.event("run_failed", f"{command} failed", {"error": str(exc)})
            raise
        status = "done" if code == 0 else "failed"
        if conn is not None:
            db.update_run_status(
                conn, int(run_id), status, error=None if code == 0 else f"exit {code}"
            )
        run_log.event("run_done", f"{command} finished", {"exit_code": code})
        logger.info("Run done id=%s command=%s status=%s", run_id, command, status)
        return code

    return handler


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="Experiment TOML file (defaults when omitted)")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="KEY=VALUE",
        help="Override a config key, e.g. --set network.N=32 or --set sweep.M=[8,12,16]",
    )
    p.add_argument("--seed", type=int, help="Master RNG seed (unsigned 64-bit)")
    p.add_argument("--out", help="Output path; stdout when omitted or '-'")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--preset", choices=sorted(PRESETS), help="Run-length preset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abft", description="802.11ad A-BFT contention: model, simulate, tune"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    analytic_p = subparsers.add_parser("analytic", help="Mean-field model report")
    _add_common(analytic_p)
    analytic_p.set_defaults(func=_execute("analytic", _cmd_analytic))

    simulate_p = subparsers.add_parser("simulate", help="Monte Carlo simulation with CIs")
    _add_common(simulate_p)
    simulate_p.set_defaults(func=_execute("simulate", _cmd_simulate))

    sweep_p = subparsers.add_parser("sweep", help="Analytic and simulated metrics side by side")
    _add_common(sweep_p)
    sweep_p.set_defaults(func=_execute("sweep", _cmd_sweep))

    validate_p = subparsers.add_parser("validate", help="Run the self-consistency suites")
    _add_common(validate_p)
    validate_p.add_argument(
        "--suite",
        dest="suites",
        action="append",
        choices=sorted(SUITES),
        help="Run only this suite (repeatable)",
    )
    validate_p.set_defaults(func=_execute("validate", _cmd_validate))

    optimize_p = subparsers.add_parser("optimize", help="Tuning table and default-vs-tuned rows")
    _add_common(optimize_p)
    optimize_p.set_defaults(func=_execute("optimize", _cmd_optimize))

    runs_p = subparsers.add_parser("runs", help="List the run ledger")
    runs_p.add_argument("--status", choices=("running", "done", "failed"))
    runs_p.set_defaults(func=_cmd_runs)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(Config.load().log_level)
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error [{v.code}] {v.field}: {v.message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (model.SolverError, ConvergenceError, StateSpaceError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
