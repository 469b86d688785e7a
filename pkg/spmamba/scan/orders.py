"""
Circular-Hilbert scan orders.

A square patch grid of side S is split into an outer frame of concentric
rings and a centered S/2 x S/2 block. Rings are walked one after another
and the block is walked along a Hilbert curve. Eight directions come from
the start corner, the ring rotation and the progression between frame and
block. Cell ids are row-major: ``row * S + col``.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, List

import numpy as np

from shared.errors import ScanGridError

from .hilbert import hilbert_matrix


class Corner(str, Enum):
    UPPER_LEFT = "upper-left"
    UPPER_RIGHT = "upper-right"


class Rotation(str, Enum):
    CLOCKWISE = "clockwise"
    COUNTERCLOCKWISE = "counterclockwise"


class Progression(str, Enum):
    OUTER_TO_CENTER = "outer-to-center"
    CENTER_TO_OUTER = "center-to-outer"


_CORNERS = list(Corner)
_ROTATIONS = list(Rotation)
_PROGRESSIONS = list(Progression)


@dataclass(frozen=True)
class ScanDirection:
    corner: Corner
    rotation: Rotation
    progression: Progression

    @property
    def index(self) -> int:
        """corner * 4 + rotation * 2 + progression."""
        return (
            _CORNERS.index(self.corner) * 4
            + _ROTATIONS.index(self.rotation) * 2
            + _PROGRESSIONS.index(self.progression)
        )

    @classmethod
    def from_index(cls, index: int) -> "ScanDirection":
        if not 0 <= index < 8:
            raise ScanGridError(f"direction index must be in 0..7, got {index}")
        return cls(_CORNERS[index // 4], _ROTATIONS[(index // 2) % 2], _PROGRESSIONS[index % 2])

    def reversed(self) -> "ScanDirection":
        """Same corner and rotation, opposite progression."""
        other = _PROGRESSIONS[1 - _PROGRESSIONS.index(self.progression)]
        return ScanDirection(self.corner, self.rotation, other)

    def __str__(self) -> str:
        return f"{self.corner.value}/{self.rotation.value}/{self.progression.value}"


def enumerate_directions() -> List[ScanDirection]:
    """All eight directions, ordered by index."""
    return [ScanDirection.from_index(i) for i in range(8)]


@dataclass(frozen=True)
class ScanGrid:
    height: int
    width: int

    def __post_init__(self):
        if self.height != self.width:
            raise ScanGridError(f"scan grid must be square, got {self.height}x{self.width}")
        side = self.height
        if side < 4 or side % 2:
            raise ScanGridError(f"scan grid side must be an even integer >= 4, got {side}")
        half = side // 2
        if half & (half - 1):
            raise ScanGridError(f"scan grid side / 2 must be a power of two, got {half}")

    @property
    def side(self) -> int:
        return self.height

    @property
    def length(self) -> int:
        return self.height * self.width

    @property
    def center_offset(self) -> int:
        return self.height // 4

    @property
    def rings(self) -> int:
        return self.height // 4


@dataclass(frozen=True)
class ScanOrder:
    grid: ScanGrid
    direction: ScanDirection
    order: np.ndarray = field(repr=False, compare=False)
    inverse: np.ndarray = field(repr=False, compare=False)

    def apply(self, sequence: np.ndarray, axis: int = 0) -> np.ndarray:
        """Reorder a row-major sequence into visit order."""
        return np.take(sequence, self.order, axis=axis)

    def restore(self, sequence: np.ndarray, axis: int = 0) -> np.ndarray:
        """Put a visit-ordered sequence back in row-major order."""
        return np.take(sequence, self.inverse, axis=axis)


def _ring_clockwise(side: int, r: int) -> List[tuple]:
    last = side - 1 - r
    cells = [(r, c) for c in range(r, last + 1)]
    cells += [(i, last) for i in range(r + 1, last + 1)]
    cells += [(last, c) for c in range(last - 1, r - 1, -1)]
    cells += [(i, r) for i in range(last - 1, r, -1)]
    return cells


def _ring(side: int, r: int, direction: ScanDirection) -> List[tuple]:
    cells = _ring_clockwise(side, r)
    if direction.corner is Corner.UPPER_RIGHT:
        start = cells.index((r, side - 1 - r))
        cells = cells[start:] + cells[:start]
    if direction.rotation is Rotation.COUNTERCLOCKWISE:
        cells = [cells[0]] + cells[:0:-1]
    return cells


def circular_ring_order(grid: ScanGrid, direction: ScanDirection) -> np.ndarray:
    """Cell ids of the outer frame, ring by ring per the direction's progression."""
    side = grid.side
    radii = range(grid.rings)
    if direction.progression is Progression.CENTER_TO_OUTER:
        radii = reversed(radii)
    cells = [cell for r in radii for cell in _ring(side, r, direction)]
    return np.array([i * side + j for i, j in cells], dtype=np.intp)


def center_hilbert_order(grid: ScanGrid, direction: ScanDirection) -> np.ndarray:
    """Cell ids of the centered block in Hilbert order, mirrored for upper-right starts."""
    side = grid.side
    block = side // 2
    h = hilbert_matrix(int(block).bit_length() - 1)
    if direction.corner is Corner.UPPER_RIGHT:
        h = np.fliplr(h)
    rows, cols = np.unravel_index(np.argsort(h, axis=None, kind="stable"), h.shape)
    offset = grid.center_offset
    return ((rows + offset) * side + cols + offset).astype(np.intp)


@lru_cache(maxsize=256)
def circular_hilbert_order(grid: ScanGrid, direction: ScanDirection) -> ScanOrder:
    """Full visit permutation of the grid for one direction."""
    ring = circular_ring_order(grid, direction)
    center = center_hilbert_order(grid, direction)
    if direction.progression is Progression.OUTER_TO_CENTER:
        order = np.concatenate([ring, center])
    else:
        order = np.concatenate([center, ring])

    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size, dtype=np.intp)
    if order.size != grid.length or np.any(np.sort(order) != np.arange(grid.length)):
        raise ScanGridError(f"scan order for {grid.side}x{grid.side} is not a permutation")

    order.setflags(write=False)
    inverse.setflags(write=False)
    return ScanOrder(grid, direction, order, inverse)


def scan_order_stack(grid: ScanGrid, directions: Iterable[int]) -> np.ndarray:
    """(n_directions, L) array of visit orders for the given direction indices."""
    return np.stack([
        circular_hilbert_order(grid, ScanDirection.from_index(d)).order for d in directions
    ])


def visit_matrix(order: ScanOrder) -> np.ndarray:
    """Grid whose cells hold their step index in the visit order."""
    return order.inverse.reshape(order.grid.height, order.grid.width).copy()


def format_visit_matrix(matrix: np.ndarray) -> str:
    width = len(str(int(matrix.max())))
    return "\n".join(" ".join(f"{int(v):>{width}d}" for v in row) for row in matrix)
