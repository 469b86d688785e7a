"""
``emit-maps``: anomaly maps as heatmap PNGs plus raw sidecars.
"""

import argparse
import os

from shared.models import Split

from ..data import export_map, load_split
from ..evaluation import score_images
from .base import BaseCommand, CommandContext, CommandResult, load_trained


class EmitMapsCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "emit-maps"

    @property
    def help(self) -> str:
        return "Write per-image anomaly maps (.png + .spam)"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)
        parser.add_argument("--out", help="Output directory (default: <run-dir>/maps)")
        parser.add_argument("--limit", type=int, help="Only the first N images")

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        model, config = load_trained(context, args.checkpoint)
        data = load_split(args.manifest, Split(args.split), config.model.input_size)
        entries, images = data.entries, data.images
        if args.limit is not None:
            entries, images = entries[:args.limit], images[:args.limit]
        scored = score_images(model, config, images)

        out = args.out or context.path("maps")
        scales = {}
        for entry, values in zip(entries, scored.maps):
            name = os.path.splitext(os.path.basename(entry.path))[0]
            written = export_map(out, name, values)
            scales[name] = {"min": written["min"], "max": written["max"]}

        return CommandResult(
            success=True,
            message=f"wrote {len(scales)} maps to {out}",
            data={"directory": out, "maps": len(scales), "scales": scales},
        )
