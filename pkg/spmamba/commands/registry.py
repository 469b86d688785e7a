"""
Command registry and discovery.
"""

import importlib
import pkgutil
from pathlib import Path
from typing import Dict, List, Optional

from shared.logging_config import get_logger

from .base import BaseCommand

logger = get_logger(__name__)


class CommandRegistry:
    """Name -> command instance."""

    def __init__(self):
        self._commands: Dict[str, BaseCommand] = {}

    def register(self, command: BaseCommand) -> bool:
        """Register a command; returns False if the name is taken."""
        if command.name in self._commands:
            logger.warning("Command already registered", command=command.name)
            return False
        self._commands[command.name] = command
        return True

    def get(self, name: str) -> Optional[BaseCommand]:
        return self._commands.get(name)

    def names(self) -> List[str]:
        return sorted(self._commands)

    def all(self) -> List[BaseCommand]:
        return [self._commands[name] for name in self.names()]

    def discover(self) -> "CommandRegistry":
        """Import every public module of this package and register its ``*Command`` classes."""
        package_path = Path(__file__).parent
        for _, module_name, _ in pkgutil.iter_modules([str(package_path)]):
            if module_name.startswith("_") or module_name in ("base", "registry"):
                continue
            module = importlib.import_module(f".{module_name}", package=__package__)
            for attr_name in dir(module):
                attr = getattr(module, attr_name)
                if (
                    attr_name.endswith("Command")
                    and isinstance(attr, type)
                    and issubclass(attr, BaseCommand)
                    and attr is not BaseCommand
                    and attr.__module__ == module.__name__
                ):
                    self.register(attr())
        return self


def default_registry() -> CommandRegistry:
    return CommandRegistry().discover()
