"""
Scoring a trained model on a set of images.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from shared.config import PipelineConfig
from shared.logging_config import get_logger
from shared.models import ScoreBreakdown

from ..autodiff import no_tape, precision
from ..model import SPMamba, as_batch
from ..prototype import upsample_distance
from ..scoring import AnomalyMap, ContrastParams, ScoreWeights, anomaly_maps, image_scores

logger = get_logger(__name__)


@dataclass
class ScoredBatch:
    maps: np.ndarray  # (N, H, W) anomaly maps
    distances: np.ndarray  # (N, H, W) upsampled prototype distance
    breakdowns: List[ScoreBreakdown]


def score_images(model: SPMamba, config: PipelineConfig, images: np.ndarray) -> ScoredBatch:
    """Anomaly maps and four-part scores for (N, H, W) images, in input order."""
    images = np.asarray(images)
    size = config.model.input_size
    weights = ScoreWeights.from_settings(config.scoring)
    params = ContrastParams.from_settings(config.scoring)
    batch_size = config.train.batch_size

    maps, distances, breakdowns = [], [], []
    with precision(config.precision), no_tape():
        for start in range(0, len(images), batch_size):
            out = model(as_batch(images[start:start + batch_size]))
            batch_maps = anomaly_maps(out.original, out.reconstructed, size, config.scoring.smoothing_sigma)
            d_up = upsample_distance(out.distance, size, size).data.astype(np.float64)
            for amap, dist in zip(batch_maps, d_up):
                breakdowns.append(image_scores(AnomalyMap(amap), dist, weights, params))
            maps.append(batch_maps)
            distances.append(d_up)
            logger.debug("Scored batch", start=start, size=len(batch_maps))

    return ScoredBatch(maps=np.concatenate(maps), distances=np.concatenate(distances), breakdowns=breakdowns)
