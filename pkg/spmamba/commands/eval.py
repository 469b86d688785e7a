"""
``eval``: image- and pixel-level metrics, component ablation and optional weight sweep.
"""

import argparse
import json

from shared.config import config_hash
from shared.logging_config import log_evaluation
from shared.models import Split

from ..data import load_split
from ..evaluation import build_report, format_report, score_images, sweep
from .base import BaseCommand, CommandContext, CommandResult, load_trained

REPORT_FILE = "report.json"
SWEEP_FILE = "sweep.jsonl"


class EvalCommand(BaseCommand):
    @property
    def name(self) -> str:
        return "eval"

    @property
    def help(self) -> str:
        return "Evaluate a checkpoint on the test split and write report.json"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--sweep", action="store_true", help="Also sweep (alpha, beta, gamma) into sweep.jsonl")

    def run(self, context: CommandContext) -> CommandResult:
        args = context.args
        model, config = load_trained(context, args.checkpoint)
        data = load_split(args.manifest, Split.TEST, config.model.input_size)
        scored = score_images(model, config, data.images)

        report = build_report(
            [e.path for e in data.entries],
            data.labels,
            scored.breakdowns,
            scored.maps,
            data.masks,
            config_hash(config),
        )
        path = context.path(REPORT_FILE)
        with open(path, "w") as f:
            f.write(json.dumps(json.loads(report.model_dump_json()), indent=2, sort_keys=True) + "\n")

        summary = {
            "image_auroc": report.image_auroc,
            "image_ap": report.image_ap,
            "image_f1": report.image_f1,
            "image_acc": report.image_acc,
            "pixel_auroc": report.pixel_auroc,
            "pixel_ap": report.pixel_ap,
            "pixel_f1": report.pixel_f1,
            "mad": report.mad,
        }
        log_evaluation(self.logger, summary, report.config_hash)
        print(format_report(report))

        data_out = {"report": path, "threshold": report.threshold, "ablation": report.ablation, **summary}
        if args.sweep:
            records = sweep(scored.breakdowns, data.labels)
            sweep_path = context.path(SWEEP_FILE)
            with open(sweep_path, "w") as f:
                for record in records:
                    f.write(record.model_dump_json() + "\n")
            best = max(records, key=lambda r: r.auroc)
            data_out["sweep"] = sweep_path
            data_out["sweep_best"] = best.model_dump()

        return CommandResult(
            success=True,
            message=f"image AUROC {report.image_auroc:.4f}, pixel AUROC {report.pixel_auroc:.4f}",
            data=data_out,
        )
