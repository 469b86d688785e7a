"""
8-bit grayscale PNG IO.
"""

import os
from typing import Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from shared.errors import ImageFormatError


def _open(path: str) -> Image.Image:
    if not os.path.isfile(path):
        raise ImageFormatError(f"image not found: {path}")
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise ImageFormatError(f"cannot decode {path}: {e}") from e
    if img.format != "PNG":
        raise ImageFormatError(f"{path}: expected PNG, got {img.format}")
    if img.mode != "L":
        raise ImageFormatError(f"{path}: expected 8-bit grayscale (mode L), got mode {img.mode}")
    return img


def read_image(path: str, size: Optional[int] = None) -> np.ndarray:
    """
    Read a grayscale PNG as float64 values in [0, 1].

    With ``size`` the image is bilinearly resized to ``size x size`` in
    floating point, so no second quantization happens.
    """
    img = _open(path)
    if size is not None and img.size != (size, size):
        resized = Image.fromarray(np.asarray(img, dtype=np.float32)).resize((size, size), Image.Resampling.BILINEAR)
        return np.clip(np.asarray(resized, dtype=np.float64) / 255.0, 0.0, 1.0)
    return np.asarray(img, dtype=np.float64) / 255.0


def write_image(path: str, values: np.ndarray) -> str:
    """Quantize ``values`` (clipped to [0, 1]) to 8 bits and save as PNG."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ImageFormatError(f"expected a 2-D image, got shape {values.shape}")
    if not np.isfinite(values).all():
        raise ImageFormatError(f"refusing to write non-finite values to {path}")
    pixels = np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    Image.fromarray(pixels).save(path, format="PNG")
    return path


def read_mask(path: str, size: Optional[int] = None) -> np.ndarray:
    """Binary mask (pixel > 127); resized with nearest-neighbour."""
    img = _open(path)
    if size is not None and img.size != (size, size):
        img = img.resize((size, size), Image.Resampling.NEAREST)
    return np.asarray(img) > 127


def write_mask(path: str, mask: np.ndarray) -> str:
    return write_image(path, np.asarray(mask, dtype=np.float64))
