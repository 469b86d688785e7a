"""
Exception hierarchy shared by every SP-Mamba component.

Library code raises these; the CLI boundary turns them into command results
and exit codes.
"""

from typing import Iterable, Optional, Sequence


class SPMambaError(Exception):
    """Base class for all pipeline errors."""


class ShapeMismatchError(SPMambaError, ValueError):
    """An operation received tensors whose shapes do not conform."""

    def __init__(self, op: str, detail: str):
        self.op = op
        self.detail = detail
        super().__init__(f"{op}: shape mismatch ({detail})")


class TapeError(SPMambaError, RuntimeError):
    """Invalid use of a gradient tape."""


class NonFiniteValueError(SPMambaError, ArithmeticError):
    """A value that must be finite was NaN or infinite."""


class ScanGridError(SPMambaError, ValueError):
    """A patch grid violates the scan-order constraints."""


class WindowConfigError(SPMambaError, ValueError):
    """Invalid sliding-window configuration for prototype matching."""


class ConfigError(SPMambaError, ValueError):
    """Configuration could not be loaded or validated."""


class NonFiniteGradientError(SPMambaError, ArithmeticError):
    """An optimizer step was rejected because gradients were not finite."""

    def __init__(self, names: Sequence[str]):
        self.names = list(names)
        shown = ", ".join(self.names[:8])
        more = "" if len(self.names) <= 8 else f" (+{len(self.names) - 8} more)"
        super().__init__(f"non-finite gradients for: {shown}{more}")


class TrainingAbortedError(SPMambaError, RuntimeError):
    """Training stopped on a non-finite loss."""

    def __init__(self, message: str, last_checkpoint: Optional[str] = None):
        self.last_checkpoint = last_checkpoint
        suffix = f"; last good checkpoint: {last_checkpoint}" if last_checkpoint else "; no checkpoint written yet"
        super().__init__(message + suffix)


class CheckpointError(SPMambaError, IOError):
    """A checkpoint file is missing, corrupt or incompatible."""


class ImageFormatError(SPMambaError, ValueError):
    """An image file is not an 8-bit grayscale PNG or cannot be decoded."""


class DatasetError(SPMambaError, IOError):
    """Dataset generation or loading failed."""


class MetricInputError(SPMambaError, ValueError):
    """Scores/labels do not satisfy a metric's preconditions."""


def missing_names(expected: Iterable[str], present: Iterable[str]) -> list:
    """Names from ``expected`` that are absent in ``present`` (order kept)."""
    present_set = set(present)
    return [name for name in expected if name not in present_set]
