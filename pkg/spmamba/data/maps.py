"""
Anomaly-map export: min-max normalized heatmap PNG plus a lossless sidecar.

Sidecar layout (little-endian): b"SPAM" | u32 H | u32 W | H*W float32 row-major
"""

import os
import struct
from typing import Tuple

import numpy as np

from shared.errors import ImageFormatError

from .image_io import write_image

SIDECAR_MAGIC = b"SPAM"
_HEADER = struct.Struct("<4sII")


def normalize_map(values: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Scale to [0, 1] by the map's own min/max; a constant map becomes zeros."""
    values = np.asarray(values, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if high > low:
        return (values - low) / (high - low), low, high
    return np.zeros_like(values), low, high


def write_sidecar(path: str, values: np.ndarray) -> str:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ImageFormatError(f"anomaly map must be 2-D, got shape {values.shape}")
    h, w = values.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(SIDECAR_MAGIC, h, w))
        f.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
    return path


def read_sidecar(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ImageFormatError(f"cannot read map {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise ImageFormatError(f"{path}: truncated map")
    magic, h, w = _HEADER.unpack_from(raw)
    if magic != SIDECAR_MAGIC:
        raise ImageFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * h * w
    if len(raw) != expected:
        raise ImageFormatError(f"{path}: expected {expected} bytes for {h}x{w}, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(h, w).copy()


def export_map(directory: str, name: str, values: np.ndarray) -> dict:
    """Write ``<name>.png`` and ``<name>.spam``; returns the paths and the PNG scale."""
    os.makedirs(directory, exist_ok=True)
    normalized, low, high = normalize_map(values)
    png = write_image(os.path.join(directory, f"{name}.png"), normalized)
    raw = write_sidecar(os.path.join(directory, f"{name}.spam"), values)
    return {"png": png, "raw": raw, "min": low, "max": high}
