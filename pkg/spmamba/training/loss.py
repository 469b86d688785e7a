"""
Training objective: multi-scale reconstruction MSE plus weighted mean prototype distance.
"""

from dataclasses import dataclass
from typing import List

from shared.errors import ShapeMismatchError

from ..autodiff import Tensor
from ..autodiff import functional as F
from ..backbone import FeaturePyramid
from ..prototype import upsample_distance


@dataclass
class LossTerms:
    total: Tensor
    mse: List[float]
    distance: float

    @property
    def value(self) -> float:
        return self.total.item()


def loss(
    pyr_org: FeaturePyramid,
    pyr_rec: FeaturePyramid,
    distance: Tensor,
    epsilon: float,
    size: int,
) -> LossTerms:
    """
    sum_l MSE(f_org^l, f_rec^l) + epsilon * mean(upsampled distance map).

    The original pyramid is a fixed target: no gradient flows back through
    it, so the encoder only learns through the fused features.

    Args:
        distance: (B, h, w) prototype distance at the fused stride
        size: image side the distance map is upsampled to
    """
    if len(pyr_org) != len(pyr_rec):
        raise ShapeMismatchError("loss", f"{len(pyr_org)} vs {len(pyr_rec)} pyramid levels")

    terms = [F.mse(org, rec) for org, rec in zip(pyr_org.detach(), pyr_rec)]
    total = terms[0]
    for term in terms[1:]:
        total = F.add(total, term)

    mean_distance = F.mean(upsample_distance(distance, size, size))
    total = F.add(total, F.scalar_mul(mean_distance, epsilon))
    return LossTerms(total=total, mse=[t.item() for t in terms], distance=mean_distance.item())
