"""
``train``: fit a model on the normal training split.
"""

import argparse

from shared.models import Split

from ..data import load_split
from ..training import Trainer
from .base import BaseCommand, CommandContext, CommandResult


class TrainCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "train"

    @property
    def help(self) -> str:
        return "Train on the normal images of a dataset manifest"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--manifest", required=True, help="Dataset manifest.jsonl")
        parser.add_argument("--epochs", type=int, help="Total epochs (default: train.epochs)")
        parser.add_argument("--resume", help="Checkpoint to resume from")

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        config = context.config
        data = load_split(args.manifest, Split.TRAIN, config.model.input_size)
        trainer = Trainer(config, data.images, context.run_dir)
        result = trainer.train(epochs=args.epochs, resume=args.resume)

        last = result.epochs[-1] if result.epochs else None
        return CommandResult(
            success=True,
            message=f"trained {len(result.epochs)} epoch(s), checkpoint {result.checkpoint}",
            data={
                "checkpoint": result.checkpoint,
                "epochs_run": len(result.epochs),
                "steps": result.steps,
                "final_mean_loss": last.mean_loss if last else None,
                "parameter_count": result.model.num_parameters(),
                "metrics": trainer.metrics_path,
            },
        )
