"""
``synth``: generate the synthetic benchmark.
"""

import argparse

from ..data import build_dataset, generate_normal, mean_pairwise_correlation
from .base import BaseCommand, CommandContext, CommandResult

CORRELATION_SAMPLES = 20


class SynthCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "synth"

    @property
    def help(self) -> str:
        return "Generate synthetic pseudo-radiographs, masks and a manifest"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--out", help="Dataset directory (default: <run-dir>/data)")
        parser.add_argument("--n-train", type=int, default=200)
        parser.add_argument("--n-test-normal", type=int, default=50)
        parser.add_argument("--n-test-abnormal", type=int, default=50)

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        config = context.config
        root = args.out or context.path("data")
        manifest = build_dataset(
            config.synth, root, config.seed, args.n_train, args.n_test_normal, args.n_test_abnormal
        )

        count = min(CORRELATION_SAMPLES, args.n_train)
        correlation = None
        if count >= 2:
            images = [generate_normal(config.synth, config.seed, i).image for i in range(count)]
            correlation = mean_pairwise_correlation(images)
        self.logger.info("Synthetic dataset ready", manifest=manifest, correlation=correlation)

        return CommandResult(
            success=True,
            message=f"wrote {args.n_train + args.n_test_normal + args.n_test_abnormal} images to {root}",
            data={
                "manifest": manifest,
                "counts": {
                    "train": args.n_train,
                    "test_normal": args.n_test_normal,
                    "test_abnormal": args.n_test_abnormal,
                },
                "mean_pairwise_correlation": correlation,
            },
        )
