"""
Base command class and the shared run context for spmamba subcommands.
"""

import argparse
import json
import os
import platform
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy
from pydantic import BaseModel

from shared.config import PipelineConfig, config_hash, config_snapshot
from shared.logging_config import get_logger
from shared.models import RunManifest

from .. import __version__
from ..model import SPMamba
from ..training import load_model

RUN_MANIFEST = "run_manifest.json"


class CommandResult(BaseModel):
    """Result of a subcommand."""
    success: bool
    message: str
    data: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


@dataclass
class CommandContext:
    """Everything a command needs: validated config, run directory and parsed flags."""
    config: PipelineConfig
    run_dir: str
    args: argparse.Namespace

    def path(self, *parts: str) -> str:
        return os.path.join(self.run_dir, *parts)


class BaseCommand(ABC):
    """
    Base class for all subcommands.

    Subclasses live in their own module inside ``spmamba.commands`` and are
    discovered at startup.
    """

    def __init__(self):
        self.logger = get_logger(f"spmamba.command.{self.name}")

    @property
    @abstractmethod
    def name(self) -> str:
        """Subcommand name as typed on the command line."""
        pass

    @property
    @abstractmethod
    def help(self) -> str:
        """One-line description for ``--help``."""
        pass

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Register subcommand-specific flags."""

    @abstractmethod
    def run(self, context: CommandContext) -> CommandResult:
        """
        Execute the command.

        Library errors propagate; the CLI turns them into exit codes.
        """
        pass


def package_versions() -> Dict[str, str]:
    return {
        "spmamba": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_run_manifest(context: CommandContext, command: str, result: CommandResult) -> str:
    """Write ``run_manifest.json`` with the config snapshot and the command's outputs."""
    config = context.config
    outputs = dict(result.data or {})
    outputs["success"] = result.success
    if result.error:
        outputs["error"] = result.error
    manifest = RunManifest(
        command=command,
        seed=config.seed,
        preset=config.preset,
        precision=config.precision,
        config_hash=config_hash(config),
        config=config_snapshot(config),
        versions=package_versions(),
        outputs=outputs,
    )
    os.makedirs(context.run_dir, exist_ok=True)
    path = context.path(RUN_MANIFEST)
    with open(path, "w") as f:
        f.write(json.dumps(json.loads(manifest.model_dump_json()), indent=2, sort_keys=True) + "\n")
    return path


def load_trained(context: CommandContext, checkpoint: str) -> Tuple[SPMamba, PipelineConfig]:
    """
    Model from a checkpoint; scoring settings come from the current config.

    Model geometry, seed and precision are those the checkpoint was trained with.
    """
    model, stored, _ = load_model(checkpoint)
    return model, stored.model_copy(update={"scoring": context.config.scoring})
