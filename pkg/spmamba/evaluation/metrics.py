"""
Rank-based detection metrics.

All metrics depend on scores only through their order, so any strictly
increasing transform of the scores leaves them unchanged.
"""

from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.metrics import average_precision_score, roc_auc_score, roc_curve

from shared.errors import MetricInputError


def _validate(scores, labels, need_negatives: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise MetricInputError(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        raise MetricInputError("no scores given")
    if not np.isfinite(scores).all():
        raise MetricInputError("scores contain NaN or Inf")
    if not np.isin(labels, (0, 1)).all():
        raise MetricInputError("labels must be 0 or 1")
    labels = labels.astype(np.int64)
    if not labels.any():
        raise MetricInputError("no positive labels")
    if need_negatives and labels.all():
        raise MetricInputError("no negative labels")
    return scores, labels


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve; tied pairs count one half."""
    scores, labels = _validate(scores, labels)
    return float(roc_auc_score(labels, scores))


def average_precision(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Step-interpolated area under precision-recall; tied scores form one step."""
    scores, labels = _validate(scores, labels, need_negatives=False)
    return float(average_precision_score(labels, scores))


def f1_acc_at_best_threshold(scores: Sequence[float], labels: Sequence[int]) -> Tuple[float, float, float]:
    """
    Sweep every attained score as a threshold (predict positive for
    ``score >= t``) and keep the best F1.

    Returns:
        (F1, accuracy, threshold); the lowest threshold wins among equal F1
    """
    scores, labels = _validate(scores, labels)
    fpr, tpr, thresholds = roc_curve(labels, scores, drop_intermediate=False)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos

    # entry 0 is the "predict nothing" point above the highest score
    tp = np.rint(tpr[1:] * n_pos)
    fp = np.rint(fpr[1:] * n_neg)
    f1 = 2 * tp / (2 * tp + fp + (n_pos - tp))

    # thresholds descend, so the last maximum is the lowest threshold
    best = int(np.flatnonzero(f1 == f1.max())[-1])
    acc = (tp[best] + n_neg - fp[best]) / labels.size
    return float(f1[best]), float(acc), float(thresholds[1:][best])


def pixel_metrics(maps: Sequence[np.ndarray], masks: Sequence[np.ndarray]) -> Dict[str, float]:
    """AUROC / AP / best F1 over the pooled pixels of all images."""
    if len(maps) != len(masks):
        raise MetricInputError(f"{len(maps)} maps vs {len(masks)} masks")
    if len(maps) == 0:
        raise MetricInputError("no maps given")
    for i, (m, k) in enumerate(zip(maps, masks)):
        if np.shape(m) != np.shape(k):
            raise MetricInputError(f"map {i} has shape {np.shape(m)}, mask has {np.shape(k)}")
    values = np.concatenate([np.asarray(m, dtype=np.float64).ravel() for m in maps])
    truth = np.concatenate([np.asarray(k).astype(np.int64).ravel() for k in masks])
    if not truth.any():
        raise MetricInputError("masks contain no anomalous pixels")
    f1, _, _ = f1_acc_at_best_threshold(values, truth)
    return {
        "auroc": auroc(values, truth),
        "ap": average_precision(values, truth),
        "f1": f1,
    }
