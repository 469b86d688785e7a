"""
Central finite differences, the oracle for every backward rule.
"""

from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from shared.errors import NonFiniteValueError


def finite_diff_grad(
    function: Callable[[np.ndarray], float],
    point: np.ndarray,
    step: float = 1e-5,
    indices: Optional[Iterable[Tuple[int, ...]]] = None,
) -> np.ndarray:
    """
    Central-difference gradient estimate of a scalar function.

    Args:
        function: deterministic scalar function of one array
        point: evaluation point (not modified)
        step: probe half-width, must be > 0
        indices: optional subset of coordinates; others stay zero

    Returns:
        Array shaped like ``point``
    """
    if step <= 0:
        raise ValueError("finite-difference step must be > 0")

    x = np.array(point, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    coords = list(indices) if indices is not None else list(np.ndindex(x.shape))

    for idx in coords:
        original = x[idx]
        x[idx] = original + step
        upper = float(function(x))
        x[idx] = original - step
        lower = float(function(x))
        x[idx] = original
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NonFiniteValueError(f"function is not finite near coordinate {idx}")
        grad[idx] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-7) -> np.ndarray:
    """|g - fd| / max(|g|, |fd|, floor), elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale
