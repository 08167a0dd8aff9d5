from __future__ import annotations

import argparse
import dataclasses
import os

from abft.cli.main import main as abft_main
from abft.domain.params import ProtocolParams
from abft.optimize import tuning
from abft.reporting import export

N_GRID = [4, 8, 12, 16, 20, 24, 28, 32]
M_GRID = [8, 12, 16]


def _list(values: list[int]) -> str:
    return "[" + ",".join(str(v) for v in values) + "]"


def _cli(argv: list[str]) -> None:
    code = abft_main(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> int:
    parser = argparse.ArgumentParser(description="Write one CSV per A-BFT figure")
    parser.add_argument("--out-dir", default="figures")
    parser.add_argument("--preset", choices=["paper", "desk"], default="desk")
    parser.add_argument("--seed", default="1")
    args = parser.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    common = ["--preset", args.preset, "--seed", args.seed]
    grid = ["--set", f"sweep.N={_list(N_GRID)}", "--set", f"sweep.M={_list(M_GRID)}"]

    def out(name: str) -> list[str]:
        return ["--out", os.path.join(args.out_dir, name)]

    # Success probability, efficiency and latency vs N, analytic next to simulated.
    _cli(["sweep", *common, *grid, *out("n_sweep.csv")])
    # Default R=8 against R=2 at M=8.
    _cli(
        [
            "sweep",
            *common,
            "--set",
            f"sweep.N={_list(N_GRID)}",
            "--set",
            "sweep.M=[8]",
            "--set",
            "sweep.R=[2,8]",
            *out("retry_limit.csv"),
        ]
    )
    # Tuned table, tuning.comparison.csv (default vs tuned S and D) and
    # tuning.r_star.csv (best R per (N, M) with W held at 8).
    _cli(["optimize", *common, *grid, *out("tuning.csv")])

    slots = dataclasses.replace(ProtocolParams(), R=1)
    curve = tuning.slot_count_curve(slots, N_GRID)
    export.write(
        export.slot_count_frame(curve, R=slots.R, W=slots.W),
        os.path.join(args.out_dir, "slot_count.csv"),
        "csv",
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
