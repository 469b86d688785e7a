"""
Hilbert matrices.

``hilbert_matrix(n)`` is a 2^n x 2^n matrix whose entries 1..4^n give the
visit step of every cell; consecutive steps are 4-neighbors.
"""

from functools import lru_cache

import numpy as np

from shared.errors import ScanGridError

BASE = np.array([[1, 2], [4, 3]], dtype=np.int64)


@lru_cache(maxsize=None)
def _hilbert(order: int) -> np.ndarray:
    h = BASE
    for n in range(1, order):
        q = 4 ** n
        e = np.ones_like(h)
        if n % 2 == 0:
            h = np.block([
                [h, q * e + h.T],
                [(4 * q + 1) * e - np.flipud(h), (3 * q + 1) * e - np.fliplr(h).T],
            ])
        else:
            # odd step: quadrants arranged so the curve stays 4-connected
            h = np.block([
                [h, (4 * q + 1) * e - np.fliplr(h)],
                [q * e + h.T, (3 * q + 1) * e - np.fliplr(h.T)],
            ])
    h = np.ascontiguousarray(h)
    h.setflags(write=False)
    return h


def hilbert_matrix(order: int) -> np.ndarray:
    """Visit-index matrix of the given order (>= 1)."""
    if order < 1:
        raise ScanGridError(f"Hilbert order must be >= 1, got {order}")
    if order > 31:
        raise ScanGridError(f"Hilbert order {order} overflows 64-bit visit indices")
    return _hilbert(order)


def hilbert_path(order: int) -> np.ndarray:
    """(4^n, 2) array of (row, col) cells in visit order."""
    h = hilbert_matrix(order)
    flat = np.argsort(h, axis=None, kind="stable")
    return np.stack(np.unravel_index(flat, h.shape), axis=1)


def is_four_connected(path: np.ndarray) -> bool:
    """True when every consecutive pair of cells differs by one unit step."""
    steps = np.abs(np.diff(np.asarray(path), axis=0)).sum(axis=1)
    return bool(np.all(steps == 1))
