"""
Dense tensors with reverse-mode differentiation.
"""

from . import functional
from .gradcheck import finite_diff_grad, relative_error
from .rng import Stream, generator
from .tensor import (
    Function,
    Tape,
    TapeNode,
    Tensor,
    active_tape,
    backward,
    default_dtype,
    get_precision,
    no_tape,
    precision,
    set_precision,
)

__all__ = [
    "Function",
    "Stream",
    "Tape",
    "TapeNode",
    "Tensor",
    "active_tape",
    "backward",
    "default_dtype",
    "finite_diff_grad",
    "functional",
    "generator",
    "get_precision",
    "no_tape",
    "precision",
    "relative_error",
    "set_precision",
]
