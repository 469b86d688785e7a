"""
Pluggable CLI subcommands.
"""

from .base import RUN_MANIFEST, BaseCommand, CommandContext, CommandResult, write_run_manifest
from .registry import CommandRegistry, default_registry

__all__ = [
    "BaseCommand",
    "CommandContext",
    "CommandRegistry",
    "CommandResult",
    "RUN_MANIFEST",
    "default_registry",
    "write_run_manifest",
]
