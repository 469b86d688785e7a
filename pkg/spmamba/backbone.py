"""
Three-scale encoder and Half-FPN fusion.
"""

from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from shared.config import ModelSettings
from shared.errors import ShapeMismatchError
from shared.models import PyramidRole

from . import nn
from .autodiff import Tensor
from .autodiff import functional as F

STRIDES = (4, 8, 16)


@dataclass
class FeaturePyramid:
    """Grids at strides 4, 8 and 16, channels-last (B, h, w, C)."""

    levels: Tuple[Tensor, Tensor, Tensor]
    role: PyramidRole = PyramidRole.ORIGINAL

    def __post_init__(self):
        if len(self.levels) != 3:
            raise ShapeMismatchError("feature-pyramid", f"expected 3 levels, got {len(self.levels)}")

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.levels)

    def __getitem__(self, level: int) -> Tensor:
        return self.levels[level]

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def shapes(self) -> List[Tuple[int, ...]]:
        return [t.shape for t in self.levels]

    def detach(self) -> "FeaturePyramid":
        return FeaturePyramid(tuple(t.detach() for t in self.levels), self.role)


class Encoder(nn.Module):
    """
    7x7 stride-2 stem followed by three 3x3 stride-2 stages, silu after each.
    """

    def __init__(self, rng: np.random.Generator, settings: ModelSettings):
        c1, c2, c3 = settings.channels
        self.input_size = settings.input_size
        self.stem = nn.Conv2d(rng, 1, settings.stem_channels, 7, stride=2, padding=3)
        self.stage1 = nn.Conv2d(rng, settings.stem_channels, c1, 3, stride=2, padding=1)
        self.stage2 = nn.Conv2d(rng, c1, c2, 3, stride=2, padding=1)
        self.stage3 = nn.Conv2d(rng, c2, c3, 3, stride=2, padding=1)

    def __call__(self, image: Tensor) -> FeaturePyramid:
        if image.ndim == 3:
            image = F.reshape(image, image.shape + (1,))
        size = self.input_size
        if image.ndim != 4 or image.shape[1:] != (size, size, 1):
            raise ShapeMismatchError("encoder", f"image batch {image.shape}, expected (B, {size}, {size}[, 1])")

        x = F.silu(self.stem(image))
        f1 = F.silu(self.stage1(x))
        f2 = F.silu(self.stage2(f1))
        f3 = F.silu(self.stage3(f2))
        return FeaturePyramid((f1, f2, f3), PyramidRole.ORIGINAL)


class HalfFPN(nn.Module):
    """
    Projects each level to a common width and sums them at stride 8.

    Stride 4 is 2x2 average-pooled, stride 16 is nearest-upsampled.
    """

    def __init__(self, rng: np.random.Generator, settings: ModelSettings):
        c1, c2, c3 = settings.channels
        self.lateral1 = nn.Linear(rng, c1, settings.fused_channels)
        self.lateral2 = nn.Linear(rng, c2, settings.fused_channels)
        self.lateral3 = nn.Linear(rng, c3, settings.fused_channels)

    def __call__(self, pyramid: FeaturePyramid) -> Tensor:
        f1, f2, f3 = pyramid
        if f1.shape[1] != 2 * f2.shape[1] or f3.shape[1] * 2 != f2.shape[1]:
            raise ShapeMismatchError("half-fpn", f"level shapes {pyramid.shapes} are not strides 4/8/16")
        fused = F.add(F.avg_pool2(self.lateral1(f1)), self.lateral2(f2))
        return F.add(fused, F.upsample_nearest(self.lateral3(f3), 2))
