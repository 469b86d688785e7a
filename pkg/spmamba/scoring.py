"""
Anomaly maps and the four-part image score.

Maps come from the multi-scale cosine distance between original and
reconstructed features. Image scores combine the map maximum, the mean
prototype distance, a concentration term around the maximum and a
difference-of-Gaussians contrast term:

    S_total = S_org + alpha * S_pdist + beta * S_concen + gamma * S_contra
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import ndimage

from shared.config import ScoringSettings
from shared.errors import NonFiniteValueError, ShapeMismatchError
from shared.models import ScoreBreakdown

from .autodiff.functional import interpolation_matrix
from .backbone import FeaturePyramid


class AnomalyMap:
    """Non-negative H x W score field with its cached maximum."""

    __slots__ = ("values", "peak", "position")

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ShapeMismatchError("anomaly-map", f"expected a non-empty 2D map, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValueError("anomaly map contains NaN or Inf")
        if np.any(values < 0):
            raise ValueError("anomaly map entries must be >= 0")
        self.values = values
        flat = int(np.argmax(values))  # row-major first maximizer
        self.position = tuple(int(v) for v in np.unravel_index(flat, values.shape))
        self.peak = float(values.flat[flat])

    @property
    def shape(self):
        return self.values.shape

    def __repr__(self) -> str:
        return f"AnomalyMap(shape={self.shape}, peak={self.peak:.6g}, position={self.position})"


@dataclass(frozen=True)
class ContrastParams:
    sigma: float = 0.6
    k_sigma: float = 1.2
    radius: Optional[int] = None

    def __post_init__(self):
        if self.sigma <= 0 or self.k_sigma <= self.sigma:
            raise ValueError("contrast widths need sigma > 0 and k_sigma > sigma")
        minimum = math.ceil(3 * self.k_sigma)
        if self.radius is None:
            object.__setattr__(self, "radius", minimum)
        elif self.radius < minimum:
            raise ValueError(f"kernel radius must be >= ceil(3 * k_sigma) = {minimum}")

    @classmethod
    def from_settings(cls, settings: ScoringSettings) -> "ContrastParams":
        return cls(sigma=settings.sigma, k_sigma=settings.k_sigma)


@dataclass(frozen=True)
class ScoreWeights:
    alpha: float = 1.0
    beta: float = -0.025
    gamma: float = 400.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.alpha, self.beta, self.gamma)):
            raise ValueError("score weights must be finite")

    @classmethod
    def from_settings(cls, settings: ScoringSettings) -> "ScoreWeights":
        return cls(alpha=settings.alpha, beta=settings.beta, gamma=settings.gamma)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """1 - cosine similarity over the last axis; zero vectors count as similarity 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
    dot = (a * b).sum(axis=-1)
    sim = np.divide(dot, denom, out=np.zeros_like(dot), where=denom > 0)
    return 1.0 - sim


def resize_bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Align-corners bilinear resize of the last two axes."""
    rows = interpolation_matrix(values.shape[-2], height)
    cols = interpolation_matrix(values.shape[-1], width)
    return rows @ values @ cols.T


def anomaly_maps(
    pyr_org: FeaturePyramid,
    pyr_rec: FeaturePyramid,
    size: int,
    smoothing_sigma: float = 4.0,
) -> np.ndarray:
    """(B, size, size) summed multi-scale cosine-distance maps, smoothed and clamped at 0."""
    total = None
    for org, rec in zip(pyr_org, pyr_rec):
        if org.shape != rec.shape:
            raise ShapeMismatchError("anomaly-map", f"original {org.shape} vs reconstructed {rec.shape}")
        level = resize_bilinear(cosine_distance(org.data, rec.data), size, size)
        total = level if total is None else total + level
    if smoothing_sigma > 0:
        total = ndimage.gaussian_filter(total, sigma=(0, smoothing_sigma, smoothing_sigma))
    return np.maximum(total, 0.0)


def recon_anomaly_map(
    pyr_org: FeaturePyramid,
    pyr_rec: FeaturePyramid,
    size: int,
    smoothing_sigma: float = 4.0,
) -> AnomalyMap:
    """Anomaly map of a single-image pyramid pair."""
    maps = anomaly_maps(pyr_org, pyr_rec, size, smoothing_sigma)
    if maps.shape[0] != 1:
        raise ShapeMismatchError("anomaly-map", f"expected one image, got batch of {maps.shape[0]}")
    return AnomalyMap(maps[0])


def s_concen(anomaly_map: AnomalyMap) -> float:
    """Mean of (e - e*)^2 weighted by the Euclidean distance to the peak."""
    values = anomaly_map.values
    rows, cols = np.indices(values.shape)
    r0, c0 = anomaly_map.position
    distance = np.hypot(rows - r0, cols - c0)
    return float(np.mean((values - anomaly_map.peak) ** 2 * distance))


def gaussian_2d(radius: int, sigma: float) -> np.ndarray:
    """Isotropic Gaussian density sampled on the integer grid [-radius, radius]^2."""
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    sq = ax[:, None] ** 2 + ax[None, :] ** 2
    return np.exp(-sq / (2 * sigma ** 2)) / (2 * math.pi * sigma ** 2)


def dog_kernel(params: ContrastParams, zero_sum: bool = True) -> np.ndarray:
    """G(k_sigma) - G(sigma), shifted to sum to zero unless ``zero_sum`` is off."""
    kernel = gaussian_2d(params.radius, params.k_sigma) - gaussian_2d(params.radius, params.sigma)
    if zero_sum:
        kernel = kernel - kernel.mean()
    return kernel


def s_contra(anomaly_map: AnomalyMap, params: ContrastParams) -> float:
    """Mean absolute DoG response of the map (reflect padding)."""
    response = ndimage.convolve(anomaly_map.values, dog_kernel(params), mode="reflect")
    return float(np.mean(np.abs(response)))


def component_scores(anomaly_map: AnomalyMap, d_up: np.ndarray, params: ContrastParams) -> Dict[str, float]:
    d_up = np.asarray(d_up, dtype=np.float64)
    if d_up.shape != anomaly_map.shape:
        raise ShapeMismatchError("image-scores", f"map {anomaly_map.shape} vs distance {d_up.shape}")
    return {
        "s_org": anomaly_map.peak,
        "s_pdist": float(d_up.mean()),
        "s_concen": s_concen(anomaly_map),
        "s_contra": s_contra(anomaly_map, params),
    }


def image_scores(
    anomaly_map: AnomalyMap,
    d_up: np.ndarray,
    weights: ScoreWeights,
    params: Optional[ContrastParams] = None,
) -> ScoreBreakdown:
    parts = component_scores(anomaly_map, d_up, params or ContrastParams())
    return ScoreBreakdown.compose(alpha=weights.alpha, beta=weights.beta, gamma=weights.gamma, **parts)
