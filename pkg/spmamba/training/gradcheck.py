"""
End-to-end gradient check of the training loss.
"""

import math
from typing import List, Tuple

import numpy as np

from shared.config import PipelineConfig
from shared.logging_config import get_logger
from shared.models import GradCheckEntry, GradCheckReport

from ..autodiff import Stream, Tape, Tensor, backward, generator, no_tape, precision, relative_error
from ..backbone import FeaturePyramid
from ..model import SPMamba, build_model
from .loss import loss

logger = get_logger(__name__)


def _loss_value(model: SPMamba, images: np.ndarray, target: FeaturePyramid, epsilon: float, size: int) -> float:
    with no_tape():
        out = model(Tensor(images))
        return loss(target, out.reconstructed, out.distance, epsilon, size).value


def seed_bank(model: SPMamba, images: np.ndarray, seed: int, scale: float = 0.5) -> None:
    """
    Fill the bank with perturbed copies of the batch's own fused features.

    Unperturbed copies sit on the cosine = 1 self-match where the window max
    has a kink; the noise moves every prototype off it.
    """
    k = model.prototypes.num_prototypes
    with no_tape():
        fused = model.fuse(Tensor(images)).data
    samples = np.concatenate([fused] * math.ceil(k / len(fused)))
    noise = generator(seed, Stream.GRADCHECK, 1).normal(size=samples.shape)
    model.prototypes.load_samples(samples + scale * (float(fused.std()) or 1.0) * noise, seed)


def grad_check(
    config: PipelineConfig,
    images: np.ndarray,
    coordinates: int = 200,
    step: float = 1e-5,
    tolerance: float = 1e-3,
    floor: float = 1e-6,
    worst: int = 10,
) -> GradCheckReport:
    """
    Compare backward gradients of the loss with central differences.

    Runs in 64-bit mode regardless of ``config.precision``. Prototypes are
    seeded from the micro-batch's perturbed fused features. The reconstruction
    target is held at the unperturbed original pyramid, matching the
    stop-gradient in the loss.

    Args:
        images: (B, H, W) micro-batch
        coordinates: number of sampled scalar parameters
        floor: lower bound of the relative-error denominator
    """
    size = config.model.input_size
    epsilon = config.train.epsilon
    with precision(64):
        model = build_model(config.model_copy(update={"precision": 64}))
        seed_bank(model, images, config.seed)

        named = list(model.named_parameters())
        with Tape() as tape:
            out = model(Tensor(images))
            terms = loss(out.original, out.reconstructed, out.distance, epsilon, size)
        target = out.original.detach()
        backward(tape, terms.total, leaves=[p for _, p in named])

        sizes = np.array([p.size for _, p in named])
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        rng = generator(config.seed, Stream.GRADCHECK)
        picks = rng.choice(int(offsets[-1]), size=min(coordinates, int(offsets[-1])), replace=False)

        entries: List[GradCheckEntry] = []
        for flat in np.sort(picks):
            which = int(np.searchsorted(offsets, flat, side="right") - 1)
            name, param = named[which]
            local = int(flat - offsets[which])
            index: Tuple[int, ...] = tuple(int(i) for i in np.unravel_index(local, param.shape))

            analytic = float(param.grad[index])
            original = param.data[index]
            param.data[index] = original + step
            upper = _loss_value(model, images, target, epsilon, size)
            param.data[index] = original - step
            lower = _loss_value(model, images, target, epsilon, size)
            param.data[index] = original
            numeric = (upper - lower) / (2 * step)

            err = float(relative_error(analytic, numeric, floor))
            entries.append(GradCheckEntry(name=name, index=index, analytic=analytic, numeric=numeric, relative_error=err))

    entries.sort(key=lambda e: e.relative_error, reverse=True)
    max_err = entries[0].relative_error if entries else 0.0
    report = GradCheckReport(
        coordinates=len(entries),
        max_relative_error=max_err,
        tolerance=tolerance,
        passed=max_err <= tolerance,
        loss=terms.value,
        worst=entries[:worst],
    )
    logger.info("Gradient check", coordinates=report.coordinates, max_relative_error=max_err, passed=report.passed)
    return report
