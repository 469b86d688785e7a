"""
Evaluation reports, component ablation and weight sweeps.
"""

import itertools
from typing import Dict, List, Optional, Sequence

import numpy as np

from shared.errors import MetricInputError
from shared.models import EvalReport, ImageScoreRecord, ScoreBreakdown, SweepRecord

from .metrics import auroc, average_precision, f1_acc_at_best_threshold, pixel_metrics

COMPONENTS = ("s_org", "s_pdist", "s_concen", "s_contra", "s_total")

ALPHA_GRID = (0.0, 0.5, 1.0, 2.0)
BETA_GRID = (0.0, -0.0125, -0.025, -0.05)
GAMMA_GRID = (0.0, 100.0, 200.0, 400.0, 800.0)


def ablation_ladder(alpha: float, beta: float, gamma: float) -> Dict[str, tuple]:
    """Weights of each rung, adding one score component at a time."""
    return {
        "s_org": (0.0, 0.0, 0.0),
        "+s_pdist": (alpha, 0.0, 0.0),
        "+s_contra": (alpha, 0.0, gamma),
        "full": (alpha, beta, gamma),
    }


def reweighted_auroc(breakdowns: Sequence[ScoreBreakdown], labels: Sequence[int], alpha: float, beta: float, gamma: float) -> float:
    return auroc([b.reweighted(alpha, beta, gamma).s_total for b in breakdowns], labels)


def component_aurocs(breakdowns: Sequence[ScoreBreakdown], labels: Sequence[int]) -> Dict[str, float]:
    return {name: auroc([getattr(b, name) for b in breakdowns], labels) for name in COMPONENTS}


def sweep(
    breakdowns: Sequence[ScoreBreakdown],
    labels: Sequence[int],
    alphas: Sequence[float] = ALPHA_GRID,
    betas: Sequence[float] = BETA_GRID,
    gammas: Sequence[float] = GAMMA_GRID,
) -> List[SweepRecord]:
    """Image AUROC for every (alpha, beta, gamma) on the grid, from stored breakdowns."""
    return [
        SweepRecord(alpha=a, beta=b, gamma=g, auroc=reweighted_auroc(breakdowns, labels, a, b, g))
        for a, b, g in itertools.product(alphas, betas, gammas)
    ]


def build_report(
    paths: Sequence[str],
    labels: Sequence[int],
    breakdowns: Sequence[ScoreBreakdown],
    maps: np.ndarray,
    masks: Sequence[Optional[np.ndarray]],
    config_hash: str,
) -> EvalReport:
    """
    Image- and pixel-level metrics for one scored test split.

    Images without a mask (normals) count as all-normal pixels.
    """
    if not len(paths) == len(labels) == len(breakdowns) == len(maps) == len(masks):
        raise MetricInputError("paths, labels, scores, maps and masks must have equal length")
    labels = [int(y) for y in labels]
    totals = [b.s_total for b in breakdowns]

    f1, acc, threshold = f1_acc_at_best_threshold(totals, labels)
    full_masks = [np.zeros(m.shape, dtype=bool) if k is None else np.asarray(k, dtype=bool) for m, k in zip(maps, masks)]
    pixel = pixel_metrics(list(maps), full_masks)

    first = breakdowns[0]
    ladder = {
        name: reweighted_auroc(breakdowns, labels, *weights)
        for name, weights in ablation_ladder(first.alpha, first.beta, first.gamma).items()
    }

    image_auroc = auroc(totals, labels)
    image_ap = average_precision(totals, labels)
    mad = float(np.mean([image_auroc, image_ap, f1, acc, pixel["auroc"], pixel["ap"], pixel["f1"]]))

    return EvalReport(
        image_auroc=image_auroc,
        image_ap=image_ap,
        image_f1=f1,
        image_acc=acc,
        threshold=threshold,
        pixel_auroc=pixel["auroc"],
        pixel_ap=pixel["ap"],
        pixel_f1=pixel["f1"],
        mad=mad,
        component_auroc=component_aurocs(breakdowns, labels),
        ablation=ladder,
        images=[ImageScoreRecord(path=p, label=y, scores=b) for p, y, b in zip(paths, labels, breakdowns)],
        config_hash=config_hash,
    )


def format_report(report: EvalReport) -> str:
    """Human-readable summary with the per-component breakdown."""
    lines = [
        f"image  AUROC {report.image_auroc:.4f}  AP {report.image_ap:.4f}  "
        f"F1 {report.image_f1:.4f}  Acc {report.image_acc:.4f}  (threshold {report.threshold:.6g})",
        f"pixel  AUROC {report.pixel_auroc:.4f}  AP {report.pixel_ap:.4f}  F1 {report.pixel_f1:.4f}",
        f"mAD    {report.mad:.4f}",
        "component AUROC:",
    ]
    lines += [f"  {name:<10} {value:.4f}" for name, value in report.component_auroc.items()]
    lines.append("ablation AUROC:")
    lines += [f"  {name:<10} {value:.4f}" for name, value in report.ablation.items()]
    return "\n".join(lines)
