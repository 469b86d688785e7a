"""
``grad-check``: finite-difference check of the end-to-end training loss.
"""

import argparse
import json

import numpy as np

from ..data import generate_normal
from ..training import grad_check
from .base import BaseCommand, CommandContext, CommandResult

REPORT_FILE = "gradcheck.json"


class GradCheckCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "grad-check"

    @property
    def help(self) -> str:
        return "Compare loss gradients with central differences (64-bit)"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--coordinates", type=int, default=200)
        parser.add_argument("--batch", type=int, default=2, help="Micro-batch size")
        parser.add_argument("--step", type=float, default=1e-5)
        parser.add_argument("--tolerance", type=float, default=1e-3)

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        config = context.config
        synth = config.synth.model_copy(update={"image_size": config.model.input_size})
        images = np.stack([generate_normal(synth, config.seed, i).image for i in range(args.batch)])

        report = grad_check(config, images, coordinates=args.coordinates, step=args.step, tolerance=args.tolerance)
        path = context.path(REPORT_FILE)
        with open(path, "w") as f:
            f.write(json.dumps(json.loads(report.model_dump_json()), indent=2) + "\n")

        message = f"max relative error {report.max_relative_error:.3e} over {report.coordinates} coordinates"
        return CommandResult(
            success=report.passed,
            message=message,
            data={"report": path, "max_relative_error": report.max_relative_error, "passed": report.passed},
            error=None if report.passed else f"tolerance {report.tolerance} exceeded: {message}",
        )
