"""
SPSS decoder: rebuilds the three-scale pyramid from the fused bottleneck.
"""

from typing import List

import numpy as np

from shared.config import ModelSettings
from shared.errors import ShapeMismatchError
from shared.models import PyramidRole

from .. import nn
from ..autodiff import Tensor
from ..autodiff import functional as F
from ..backbone import FeaturePyramid
from .spss import SPSSBlock


def _stage(rng: np.random.Generator, channels: int, depth: int, settings: ModelSettings) -> List[SPSSBlock]:
    return [
        SPSSBlock(
            rng,
            channels,
            settings.directions,
            expansion=settings.expansion,
            state_dim=settings.state_dim,
            conv_kernel=settings.conv1d_kernel,
            reduction=settings.conv_branch_reduction,
        )
        for _ in range(depth)
    ]


class SPSSDecoder(nn.Module):
    """
    Four SPSS stages over strides 16, 8, 4, 4.

    The fused stride-8 grid is pooled to stride 16 for the first stage;
    later stages are reached by nearest-neighbor upsampling and a 1x1
    projection. Each scale ends in a 1x1 head giving the reconstruction.
    """

    def __init__(self, rng: np.random.Generator, settings: ModelSettings):
        c1, c2, c3 = settings.channels
        d1, d2, d3, d4 = settings.depths
        self.input_size = settings.input_size
        self.fused_channels = settings.fused_channels

        self.enter3 = nn.Linear(rng, settings.fused_channels, c3)
        self.stage1 = _stage(rng, c3, d1, settings)
        self.head3 = nn.Linear(rng, c3, c3)

        self.enter2 = nn.Linear(rng, c3, c2)
        self.stage2 = _stage(rng, c2, d2, settings)
        self.head2 = nn.Linear(rng, c2, c2)

        self.enter1 = nn.Linear(rng, c2, c1)
        self.stage3 = _stage(rng, c1, d3, settings)
        self.stage4 = _stage(rng, c1, d4, settings)
        self.head1 = nn.Linear(rng, c1, c1)

    def __call__(self, fused: Tensor) -> FeaturePyramid:
        side = self.input_size // 8
        if fused.ndim != 4 or fused.shape[1:] != (side, side, self.fused_channels):
            raise ShapeMismatchError(
                "decoder", f"fused {fused.shape}, expected (B, {side}, {side}, {self.fused_channels})"
            )

        x = self.enter3(F.avg_pool2(fused))
        for block in self.stage1:
            x = block(x)
        level3 = self.head3(x)

        x = self.enter2(F.upsample_nearest(x, 2))
        for block in self.stage2:
            x = block(x)
        level2 = self.head2(x)

        x = self.enter1(F.upsample_nearest(x, 2))
        for block in self.stage3 + self.stage4:
            x = block(x)
        level1 = self.head1(x)

        return FeaturePyramid((level1, level2, level3), PyramidRole.RECONSTRUCTED)
