"""
Metrics, model scoring and evaluation reports.
"""

from .inference import ScoredBatch, score_images
from .metrics import auroc, average_precision, f1_acc_at_best_threshold, pixel_metrics
from .report import ablation_ladder, build_report, component_aurocs, format_report, sweep

__all__ = [
    "ScoredBatch",
    "ablation_ladder",
    "auroc",
    "average_precision",
    "build_report",
    "component_aurocs",
    "f1_acc_at_best_threshold",
    "format_report",
    "pixel_metrics",
    "score_images",
    "sweep",
]
