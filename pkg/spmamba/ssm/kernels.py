"""
Selective-scan kernels on raw arrays.

Shapes (leading batch axes ``...`` are free):
    Ā, B̄: (..., L, E, N)   C: (..., L, N)   x: (..., L, E)   D_skip: (E,)

The recurrence is h_t = Ā_t * h_{t-1} + B̄_t * x_t with h_{-1} = 0 and the
readout y_t = h_t · C_t + D_skip * x_t.
"""

from typing import Tuple

import numpy as np

from shared.errors import NonFiniteValueError, ShapeMismatchError


def discretize(A: np.ndarray, B: np.ndarray, delta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Zero-order hold for the decay and Euler for the input matrix.

    Args:
        A: (E, N) negative decay rates
        B: (..., L, N) input matrix per step
        delta: (..., L, E) positive step sizes

    Returns:
        (Ā, B̄), both (..., L, E, N)
    """
    for name, arr in (("A", A), ("B", B), ("delta", delta)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValueError(f"discretize: {name} contains NaN or Inf")
    if A.ndim != 2 or delta.shape[-1] != A.shape[0] or B.shape[-1] != A.shape[1]:
        raise ShapeMismatchError("discretize", f"A {A.shape}, B {B.shape}, delta {delta.shape}")
    if B.shape[:-1] != delta.shape[:-1]:
        raise ShapeMismatchError("discretize", f"time axes of B {B.shape} and delta {delta.shape}")
    a_bar = np.exp(delta[..., None] * A)
    b_bar = delta[..., None] * B[..., None, :]
    return a_bar, b_bar


def _check_scan_shapes(a_bar, b_bar, C, x, d_skip) -> None:
    if a_bar.shape != b_bar.shape or a_bar.ndim < 3:
        raise ShapeMismatchError("selective-scan", f"Ā {a_bar.shape} vs B̄ {b_bar.shape}")
    lead, (length, channels, state) = a_bar.shape[:-3], a_bar.shape[-3:]
    if x.shape != lead + (length, channels):
        raise ShapeMismatchError("selective-scan", f"x {x.shape}, expected {lead + (length, channels)}")
    if C.shape != lead + (length, state):
        raise ShapeMismatchError("selective-scan", f"C {C.shape}, expected {lead + (length, state)}")
    if np.shape(d_skip) not in ((), (channels,)):
        raise ShapeMismatchError("selective-scan", f"D_skip {np.shape(d_skip)} for {channels} channels")


def selective_scan_sequential(a_bar, b_bar, C, x, d_skip) -> np.ndarray:
    """Step-by-step recurrence; the reference for every other kernel."""
    _check_scan_shapes(a_bar, b_bar, C, x, d_skip)
    length = x.shape[-2]
    h = np.zeros(a_bar.shape[:-3] + a_bar.shape[-2:], dtype=a_bar.dtype)
    y = np.empty_like(x)
    for t in range(length):
        h = a_bar[..., t, :, :] * h + b_bar[..., t, :, :] * x[..., t, :, None]
        y[..., t, :] = np.einsum("...en,...n->...e", h, C[..., t, :])
    return y + d_skip * x


def linear_recurrence(a: np.ndarray, b: np.ndarray, axis: int = 0) -> np.ndarray:
    """
    All states of h_t = a_t * h_{t-1} + b_t (h_{-1} = 0) along ``axis``.

    Blelloch scan over pairs (a, b) composed as
    (a1, b1) then (a2, b2) = (a1 a2, a2 b1 + b2). The time axis is padded to
    a power of two with the identity (1, 0).
    """
    if a.shape != b.shape:
        raise ShapeMismatchError("linear-recurrence", f"{a.shape} vs {b.shape}")
    a_t = np.moveaxis(a, axis, 0)
    b_t = np.moveaxis(b, axis, 0)
    length = a_t.shape[0]
    if length == 0:
        return np.array(b, copy=True)

    size = 1 << (length - 1).bit_length()
    A = np.ones((size,) + a_t.shape[1:], dtype=a.dtype)
    Bv = np.zeros((size,) + b_t.shape[1:], dtype=b.dtype)
    A[:length] = a_t
    Bv[:length] = b_t

    # up-sweep
    stride = 1
    while stride < size:
        right = np.arange(2 * stride - 1, size, 2 * stride)
        left = right - stride
        Bv[right] = A[right] * Bv[left] + Bv[right]
        A[right] = A[left] * A[right]
        stride *= 2

    A[-1] = 1
    Bv[-1] = 0

    # down-sweep
    stride = size // 2
    while stride >= 1:
        right = np.arange(2 * stride - 1, size, 2 * stride)
        left = right - stride
        pa, pb = A[right].copy(), Bv[right].copy()
        la, lb = A[left].copy(), Bv[left].copy()
        A[left], Bv[left] = pa, pb
        A[right] = pa * la
        Bv[right] = la * pb + lb
        stride //= 2

    # Bv now holds the exclusive prefix state h_{t-1}
    h = a_t * Bv[:length] + b_t
    return np.moveaxis(h, 0, axis)


def selective_scan_parallel(a_bar, b_bar, C, x, d_skip) -> np.ndarray:
    """Same result as the sequential kernel, via ``linear_recurrence``."""
    _check_scan_shapes(a_bar, b_bar, C, x, d_skip)
    h = linear_recurrence(a_bar, b_bar * x[..., None], axis=x.ndim - 2)
    return np.einsum("...len,...ln->...le", h, C) + d_skip * x
