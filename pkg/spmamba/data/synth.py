"""
Synthetic pseudo-radiographs.

A normal image is a fixed chest-like template (body ellipse, two dark lung
fields, a bright spine band) with per-image intensities, a smooth random
warp and Gaussian noise. An abnormal image adds one lesion inside a lung
field; its mask marks exactly the altered pixels. Everything is a pure
function of (seed, index).
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.special import expit

from shared.config import SynthSettings
from shared.errors import DatasetError

from ..autodiff import Stream, generator

# Template geometry in unit coordinates (row, col)
BODY_CENTER = (0.5, 0.5)
BODY_AXES = (0.47, 0.43)
LUNG_CENTERS = ((0.45, 0.30), (0.45, 0.70))
LUNG_AXES = (0.32, 0.17)
SPINE_HALF_WIDTH = 0.045
EDGE_SOFTNESS = 0.04


@dataclass
class LabeledSample:
    image: np.ndarray  # (H, W) in [0, 1]
    label: int
    mask: np.ndarray  # (H, W) bool, all False for normals
    lungs: Optional[np.ndarray] = None  # (2, H, W) bool lung fields after warping
    index: int = 0


def _ellipse_radius(size: int, center: Tuple[float, float], axes: Tuple[float, float]) -> np.ndarray:
    coords = (np.arange(size) + 0.5) / size
    rows, cols = coords[:, None], coords[None, :]
    return np.sqrt(((rows - center[0]) / axes[0]) ** 2 + ((cols - center[1]) / axes[1]) ** 2)


def _soft(radius: np.ndarray) -> np.ndarray:
    return expit((1.0 - radius) / EDGE_SOFTNESS)


def template(settings: SynthSettings, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Unwarped image and soft lung masks (2, H, W)."""
    size = settings.image_size
    body = rng.uniform(*settings.body_intensity)
    lung = rng.uniform(*settings.lung_intensity)
    spine = rng.uniform(*settings.spine_intensity)

    body_mask = _soft(_ellipse_radius(size, BODY_CENTER, BODY_AXES))
    image = settings.background_intensity + (body - settings.background_intensity) * body_mask

    lungs = np.stack([_soft(_ellipse_radius(size, c, LUNG_AXES)) for c in LUNG_CENTERS])
    for m in lungs:
        image = image * (1 - m) + lung * m

    cols = (np.arange(size) + 0.5) / size
    band = expit((SPINE_HALF_WIDTH - np.abs(cols - 0.5)) / (EDGE_SOFTNESS * 0.25))
    spine_mask = band[None, :] * body_mask
    image = image * (1 - spine_mask) + spine * spine_mask
    return image, lungs


def displacement_field(settings: SynthSettings, rng: np.random.Generator) -> np.ndarray:
    """(2, H, W) smooth displacement in pixels, max magnitude <= max_displacement * size."""
    size = settings.image_size
    coords = np.arange(size) / size
    rows, cols = np.meshgrid(coords, coords, indexing="ij")
    field = np.zeros((2, size, size))
    for axis in range(2):
        for _ in range(rng.integers(2, 4)):
            fy, fx = rng.uniform(0.3, 1.5, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            field[axis] += rng.normal() * np.sin(2 * np.pi * (fy * rows + fx * cols) + phase)
    peak = np.abs(field).max()
    limit = settings.max_displacement * size * rng.uniform(0.5, 1.0)
    return field * (limit / peak) if peak > 0 else field


def warp(values: np.ndarray, field: np.ndarray) -> np.ndarray:
    rows, cols = np.indices(values.shape[-2:], dtype=np.float64)
    coords = np.stack([rows + field[0], cols + field[1]])
    return ndimage.map_coordinates(values, coords, order=1, mode="nearest")


def generate_normal(settings: SynthSettings, seed: int, index: int) -> LabeledSample:
    """Template + warp + noise, clamped to [0, 1]."""
    rng = generator(seed, Stream.SYNTH, index, 0)
    image, lungs = template(settings, rng)
    field = displacement_field(settings, rng)
    image = warp(image, field)
    lung_fields = np.stack([warp(m, field) > 0.5 for m in lungs])
    image = np.clip(image + rng.normal(0.0, settings.noise_std, size=image.shape), 0.0, 1.0)
    return LabeledSample(
        image=image,
        label=0,
        mask=np.zeros(image.shape, dtype=bool),
        lungs=lung_fields,
        index=index,
    )


def _lesion_mask(
    lung: np.ndarray, center: np.ndarray, axes: np.ndarray, scale: float
) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.indices(lung.shape, dtype=np.float64)
    radius = np.sqrt(((rows - center[0]) / (axes[0] * scale)) ** 2 + ((cols - center[1]) / (axes[1] * scale)) ** 2)
    return (radius <= 1.0) & lung, radius


def inject_anomaly(sample: LabeledSample, settings: SynthSettings, seed: int, index: int) -> LabeledSample:
    """
    Add one lesion inside a lung field.

    The lesion is an ellipse clipped to the lung, scaled by bisection so its
    area hits a target fraction in the middle half of ``lesion_area``. The
    intensity shift is +-U(lesion_delta) times a smooth blob profile, or a
    striped texture for half of the lesions.
    """
    if sample.label != 0 or sample.lungs is None:
        raise DatasetError("lesions are injected into freshly generated normal samples only")
    rng = generator(seed, Stream.SYNTH, index, 1)
    size = settings.image_size
    lung = sample.lungs[rng.integers(2)]
    if not lung.any():
        raise DatasetError(f"sample {index} has an empty lung field")

    lo, hi = settings.lesion_area
    target = rng.uniform(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo)) * size * size
    centroid = np.array(ndimage.center_of_mass(lung))
    lung_axes = np.array(LUNG_AXES) * size
    center = centroid + 0.3 * rng.uniform(-1, 1, size=2) * lung_axes
    axes = lung_axes * rng.uniform(0.9, 1.1, size=2)

    low, high = 0.0, 2.0
    for _ in range(40):
        mid = 0.5 * (low + high)
        if _lesion_mask(lung, center, axes, mid)[0].sum() < target:
            low = mid
        else:
            high = mid
    region, radius = _lesion_mask(lung, center, axes, high)

    delta = rng.choice([-1.0, 1.0]) * rng.uniform(*settings.lesion_delta)
    profile = 0.5 + 0.5 * (1.0 - np.clip(radius, 0.0, 1.0) ** 2)
    if rng.random() < 0.5:
        angle = rng.uniform(0, np.pi)
        rows, cols = np.indices(lung.shape, dtype=np.float64)
        stripes = np.sin((rows * np.cos(angle) + cols * np.sin(angle)) * 2 * np.pi / rng.uniform(3.0, 6.0))
        profile = profile * (0.75 + 0.25 * stripes)

    shifted = np.clip(sample.image + delta * profile, 0.0, 1.0)
    image = np.where(region, shifted, sample.image)
    mask = image != sample.image

    fraction = mask.sum() / (size * size)
    if not lo <= fraction <= hi:
        raise DatasetError(f"lesion area {fraction:.4f} of sample {index} is outside [{lo}, {hi}]")
    return LabeledSample(image=image, label=1, mask=mask, lungs=sample.lungs, index=index)


def mean_pairwise_correlation(images: Sequence[np.ndarray]) -> float:
    """Mean off-diagonal Pearson correlation between flattened images."""
    flat = np.stack([np.asarray(img, dtype=np.float64).ravel() for img in images])
    if len(flat) < 2:
        raise ValueError("need at least two images")
    corr = np.corrcoef(flat)
    n = len(flat)
    return float((corr.sum() - np.trace(corr)) / (n * (n - 1)))
