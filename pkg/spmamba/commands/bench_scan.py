"""
``bench-scan``: runtime of the parallel selective scan versus sequence length.
"""

import argparse

from ..autodiff import precision
from ..ssm import format_csv, scan_runtime_benchmark
from .base import BaseCommand, CommandContext, CommandResult

BENCH_FILE = "bench_scan.csv"


def parse_lengths(text: str):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"--lengths expects comma-separated integers, got '{text}'") from e


class BenchScanCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "bench-scan"

    @property
    def help(self) -> str:
        return "Time the parallel scan and print CSV (L, median_ns)"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--lengths", type=parse_lengths, default=[1024, 2048, 4096, 8192])
        parser.add_argument("--repeats", type=int, default=10)

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        config = context.config
        with precision(config.precision):
            rows = scan_runtime_benchmark(
                args.lengths,
                repeats=args.repeats,
                channels=config.model.fused_channels,
                state_dim=config.model.state_dim,
                seed=config.seed,
            )
        csv = format_csv(rows)
        path = context.path(BENCH_FILE)
        with open(path, "w") as f:
            f.write(csv)
        print(csv, end="")

        ratios = {
            f"{b.length}/{a.length}": b.median_ns / a.median_ns
            for a, b in zip(rows, rows[1:])
            if a.median_ns > 0
        }
        return CommandResult(
            success=True,
            message=f"benchmarked {len(rows)} lengths",
            data={"csv": path, "rows": [r.model_dump() for r in rows], "ratios": ratios},
        )
