"""
``score``: per-image score breakdowns for a dataset split.
"""

import argparse

from shared.models import ImageScoreRecord, Split

from ..data import load_split
from ..evaluation import score_images
from .base import BaseCommand, CommandContext, CommandResult, load_trained

SCORES_FILE = "scores.jsonl"


class ScoreCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "score"

    @property
    def help(self) -> str:
        return "Write one score breakdown per image to scores.jsonl"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        model, config = load_trained(context, args.checkpoint)
        data = load_split(args.manifest, Split(args.split), config.model.input_size)
        scored = score_images(model, config, data.images)

        path = context.path(SCORES_FILE)
        with open(path, "w") as f:
            for entry, breakdown in zip(data.entries, scored.breakdowns):
                record = ImageScoreRecord(path=entry.path, label=entry.label, scores=breakdown)
                f.write(record.model_dump_json() + "\n")

        return CommandResult(
            success=True,
            message=f"scored {len(scored.breakdowns)} images",
            data={"scores": path, "images": len(scored.breakdowns), "split": args.split},
        )
