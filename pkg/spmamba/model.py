"""
The full network: encoder -> Half-FPN -> prototype matching + SPSS decoder.
"""

from dataclasses import dataclass

import numpy as np

from shared.config import ModelSettings, PipelineConfig

from . import nn
from .autodiff import Stream, Tensor, generator, precision
from .backbone import Encoder, FeaturePyramid, HalfFPN
from .prototype import PrototypeBank
from .ssm import SPSSDecoder


@dataclass
class ModelOutput:
    original: FeaturePyramid
    reconstructed: FeaturePyramid
    fused: Tensor
    distance: Tensor  # (B, h, w) at the fused stride


class SPMamba(nn.Module):
    def __init__(self, settings: ModelSettings, seed: int = 0):
        rng = generator(seed, Stream.PARAMS)
        self.settings = settings
        self.encoder = Encoder(rng, settings)
        self.fpn = HalfFPN(rng, settings)
        self.prototypes = PrototypeBank(
            settings.num_prototypes, settings.input_size // 8, settings.fused_channels, settings.window
        )
        self.decoder = SPSSDecoder(rng, settings)

    def fuse(self, images: Tensor) -> Tensor:
        """Fused stride-8 features only (used to seed the prototype bank)."""
        return self.fpn(self.encoder(images))

    def __call__(self, images: Tensor) -> ModelOutput:
        original = self.encoder(images)
        fused = self.fpn(original)
        return ModelOutput(
            original=original,
            reconstructed=self.decoder(fused),
            fused=fused,
            distance=self.prototypes(fused),
        )


def build_model(config: PipelineConfig) -> SPMamba:
    """Model with parameters drawn from the config's seed in its precision mode."""
    with precision(config.precision):
        return SPMamba(config.model, seed=config.seed)


def as_batch(images: np.ndarray) -> Tensor:
    """(B, H, W) or (H, W) images in [0, 1] as an input tensor."""
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[None]
    return Tensor(images)
