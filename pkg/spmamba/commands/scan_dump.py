"""
``scan-dump``: print the visit matrix of one or all scan directions.
"""

import argparse

from ..scan import ScanDirection, ScanGrid, circular_hilbert_order, format_visit_matrix, visit_matrix
from .base import BaseCommand, CommandContext, CommandResult


class ScanDumpCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "scan-dump"

    @property
    def help(self) -> str:
        return "Print the step index of every grid cell for a scan direction"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--h", type=int, default=8, help="Grid height")
        parser.add_argument("--w", type=int, default=8, help="Grid width")
        parser.add_argument("--direction", default="all", help="Direction index 0-7 or 'all'")

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        grid = ScanGrid(args.h, args.w)
        if args.direction == "all":
            indices = list(range(8))
        else:
            try:
                indices = [int(args.direction)]
            except ValueError:
                return CommandResult(
                    success=False,
                    message="invalid direction",
                    error=f"--direction must be an integer 0-7 or 'all', got '{args.direction}'",
                )

        dumped = {}
        for index in indices:
            direction = ScanDirection.from_index(index)
            matrix = visit_matrix(circular_hilbert_order(grid, direction))
            print(f"# direction {index}: {direction}")
            print(format_visit_matrix(matrix))
            dumped[str(index)] = matrix.tolist()

        return CommandResult(
            success=True,
            message=f"dumped {len(indices)} direction(s) on {grid.height}x{grid.width}",
            data={"height": grid.height, "width": grid.width, "visit_matrices": dumped},
        )
