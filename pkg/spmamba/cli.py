#!/usr/bin/env python3
"""
spmamba - command-line interface for the anomaly-detection pipeline.

Usage:
    spmamba --preset toy synth --n-train 200
    spmamba --preset toy --run-dir runs/toy train --manifest runs/toy/data/manifest.jsonl
    spmamba --run-dir runs/toy eval --checkpoint runs/toy/last.ckpt --manifest runs/toy/data/manifest.jsonl
    spmamba scan-dump --h 8 --w 8 --direction 0
    spmamba bench-scan --lengths 1024,2048,4096,8192
    spmamba --preset micro grad-check
"""

import argparse
import sys
from typing import Dict, List, Optional

from shared.config import load_config, parse_override
from shared.errors import ConfigError, ScanGridError, SPMambaError, WindowConfigError
from shared.logging_config import get_logger, log_command_result, setup_logging
from shared.models import Preset

from . import __version__
from .commands import CommandContext, CommandResult, default_registry, write_run_manifest

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

USAGE_ERRORS = (ConfigError, ScanGridError, WindowConfigError)


class SPMambaCLI:
    """Builds the parser from the registered commands and dispatches to them."""

    def __init__(self):
        self.registry = default_registry()
        self.parser = self._build_parser()

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="spmamba",
            description="SP-Mamba unsupervised anomaly detection",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=__doc__.split("Usage:", 1)[1],
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        parser.add_argument("--config", help="YAML configuration file")
        parser.add_argument("--seed", type=int, help="Root seed")
        parser.add_argument("--preset", choices=[p.value for p in Preset], help="Configuration preset")
        parser.add_argument("--precision", type=int, choices=[32, 64], help="Floating-point width")
        parser.add_argument("--run-dir", default="run", help="Directory for outputs and run_manifest.json")
        parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
        parser.add_argument(
            "--set",
            action="append",
            dest="overrides",
            default=[],
            metavar="KEY=VALUE",
            help="Config override in dot notation (can be given multiple times)",
        )

        subparsers = parser.add_subparsers(dest="command", help="Command to execute")
        for command in self.registry.all():
            sub = subparsers.add_parser(command.name, help=command.help)
            command.add_arguments(sub)
        return parser

    def _overrides(self, args: argparse.Namespace) -> Dict[str, object]:
        overrides: Dict[str, object] = dict(parse_override(text) for text in args.overrides)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.precision is not None:
            overrides["precision"] = args.precision
        if args.log_level is not None:
            overrides["log_level"] = args.log_level
        return overrides

    def run(self, argv: Optional[List[str]] = None) -> int:
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else EXIT_USAGE

        if not args.command:
            self.parser.print_help()
            return EXIT_USAGE

        try:
            config = load_config(args.config, args.preset, self._overrides(args))
        except ConfigError as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_USAGE

        setup_logging(config.log_level, config.log_file, "spmamba")
        logger = get_logger("spmamba.cli")
        logger.debug("Commands loaded", commands=self.registry.names())
        command = self.registry.get(args.command)
        context = CommandContext(config=config, run_dir=args.run_dir, args=args)

        code = EXIT_OK
        try:
            result = command.run(context)
            if not result.success:
                code = EXIT_FAILURE
        except USAGE_ERRORS as e:
            result = CommandResult(success=False, message="invalid arguments", error=str(e))
            code = EXIT_USAGE
        except (SPMambaError, OSError, ValueError) as e:
            result = CommandResult(success=False, message=f"{args.command} failed", error=str(e))
            code = EXIT_FAILURE

        try:
            write_run_manifest(context, args.command, result)
        except OSError as e:
            print(f"Error: cannot write run manifest: {e}", file=sys.stderr)
            code = code or EXIT_FAILURE

        log_command_result(logger, args.command, result.success, result.data, message=result.message)
        if result.error:
            print(f"Error: {result.error}", file=sys.stderr)
        return code


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    return SPMambaCLI().run(argv)


if __name__ == '__main__':
    sys.exit(main())
