"""
Tests for detection metrics and evaluation reports.
"""

import itertools

import numpy as np
import pytest

from shared.errors import MetricInputError
from shared.models import ScoreBreakdown
from spmamba.evaluation import (
    ablation_ladder,
    auroc,
    average_precision,
    build_report,
    f1_acc_at_best_threshold,
    format_report,
    pixel_metrics,
    sweep,
)


def pairwise_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


class TestAUROC:
    def test_perfect(self):
        assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_inverted(self):
        assert auroc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_all_tied(self):
        assert auroc([0.5] * 6, [0, 1, 0, 1, 1, 0]) == 0.5

    def test_matches_pairwise_oracle(self, rng):
        scores = np.round(rng.normal(size=60), 1)  # rounding forces ties
        labels = rng.integers(0, 2, size=60)
        labels[:2] = [0, 1]
        assert auroc(scores, labels) == pytest.approx(pairwise_auroc(scores, labels), abs=1e-12)

    def test_monotone_transform_invariance(self, rng):
        scores = rng.normal(size=40)
        labels = rng.integers(0, 2, size=40)
        labels[:2] = [0, 1]
        assert auroc(scores ** 3 + 1, labels) == pytest.approx(auroc(scores, labels), abs=1e-12)

    @pytest.mark.parametrize("scores,labels", [
        ([0.1, 0.2], [1, 1]),
        ([0.1, 0.2], [0, 0]),
        ([0.1], [0, 1]),
        ([], []),
        ([0.1, float("nan")], [0, 1]),
        ([0.1, 0.2], [0, 2]),
    ])
    def test_rejected(self, scores, labels):
        with pytest.raises(MetricInputError):
            auroc(scores, labels)


class TestAveragePrecision:
    def test_positives_first(self):
        assert average_precision([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0

    def test_hand_sweep(self):
        assert average_precision([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx((1 + 2 / 3) / 2, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_single_positive_last(self, n):
        scores = np.arange(n, 0, -1, dtype=float)
        labels = np.zeros(n, dtype=int)
        labels[-1] = 1
        assert average_precision(scores, labels) == pytest.approx(1 / n, abs=1e-12)

    def test_all_positive_allowed(self):
        assert average_precision([0.3, 0.2], [1, 1]) == 1.0


class TestBestThreshold:
    def test_perfect(self):
        f1, acc, _ = f1_acc_at_best_threshold([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
        assert (f1, acc) == (1.0, 1.0)

    def test_threshold_two(self):
        f1, acc, threshold = f1_acc_at_best_threshold([3, 2, 1, 0], [1, 1, 0, 0])
        assert (f1, acc, threshold) == (1.0, 1.0, 2.0)

    def test_lowest_threshold_on_ties(self):
        # thresholds 1 and 4 both give F1 = 2/3
        f1, _, threshold = f1_acc_at_best_threshold([4, 3, 2, 1], [1, 0, 0, 1])
        assert f1 == pytest.approx(2 / 3)
        assert threshold == 1.0

    def test_matches_confusion_enumeration(self, rng):
        scores = np.round(rng.uniform(size=50), 1)
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]
        best = (-1.0, 0.0, 0.0)
        for t in sorted(set(scores), reverse=True):
            predicted = scores >= t
            tp = int(np.sum(predicted & (labels == 1)))
            fp = int(np.sum(predicted & (labels == 0)))
            fn = int(np.sum(~predicted & (labels == 1)))
            f1 = 2 * tp / (2 * tp + fp + fn)
            if f1 >= best[0]:
                best = (f1, float(np.mean(predicted == (labels == 1))), float(t))
        f1, acc, threshold = f1_acc_at_best_threshold(scores, labels)
        assert f1 == pytest.approx(best[0], abs=1e-12)
        assert acc == pytest.approx(best[1], abs=1e-12)
        assert threshold == best[2]


class TestPixelMetrics:
    def test_map_equal_to_mask(self, rng):
        mask = rng.uniform(size=(8, 8)) > 0.7
        metrics = pixel_metrics([mask.astype(float)], [mask])
        assert metrics["auroc"] == 1.0
        assert metrics["ap"] == 1.0
        assert metrics["f1"] == 1.0

    def test_constant_maps(self, rng):
        mask = rng.uniform(size=(8, 8)) > 0.5
        assert pixel_metrics([np.full((8, 8), 0.3)], [mask])["auroc"] == 0.5

    def test_pooling_order(self, rng):
        maps = [rng.uniform(size=(8, 8)) for _ in range(3)]
        masks = [m > 0.6 for m in (rng.uniform(size=(8, 8)) for _ in range(3))]
        assert pixel_metrics(maps, masks) == pytest.approx(pixel_metrics(maps[::-1], masks[::-1]), abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(MetricInputError):
            pixel_metrics([np.zeros((4, 4))], [np.zeros((2, 2))])

    def test_no_anomalous_pixels(self):
        with pytest.raises(MetricInputError):
            pixel_metrics([np.zeros((4, 4))], [np.zeros((4, 4))])


def breakdown(s_org, s_pdist=0.0, s_concen=0.0, s_contra=0.0):
    return ScoreBreakdown.compose(s_org, s_pdist, s_concen, s_contra, alpha=1.0, beta=-0.025, gamma=400.0)


class TestReport:
    def make_inputs(self):
        labels = [0, 0, 1, 1]
        breakdowns = [breakdown(0.1), breakdown(0.2), breakdown(0.8, 0.1), breakdown(0.9, 0.2)]
        maps = np.zeros((4, 4, 4))
        masks = [None, None, np.zeros((4, 4), dtype=bool), np.zeros((4, 4), dtype=bool)]
        maps[2, 1, 1] = maps[3, 2, 2] = 1.0
        masks[2][1, 1] = masks[3][2, 2] = True
        return [f"img{i}.png" for i in range(4)], labels, breakdowns, maps, masks

    def test_perfect_split(self):
        report = build_report(*self.make_inputs(), config_hash="abc")
        assert report.image_auroc == 1.0
        assert report.pixel_auroc == 1.0
        assert report.mad == pytest.approx(1.0)
        assert set(report.component_auroc) == {"s_org", "s_pdist", "s_concen", "s_contra", "s_total"}
        assert list(report.ablation) == ["s_org", "+s_pdist", "+s_contra", "full"]
        assert len(report.images) == 4
        assert "mAD" in format_report(report)

    def test_length_mismatch(self):
        paths, labels, breakdowns, maps, masks = self.make_inputs()
        with pytest.raises(MetricInputError):
            build_report(paths[:3], labels, breakdowns, maps, masks, config_hash="abc")

    def test_ladder(self):
        ladder = ablation_ladder(1.0, -0.025, 400.0)
        assert ladder["s_org"] == (0.0, 0.0, 0.0)
        assert ladder["full"] == (1.0, -0.025, 400.0)

    def test_sweep_grid(self):
        _, labels, breakdowns, _, _ = self.make_inputs()
        records = sweep(breakdowns, labels)
        assert len(records) == 4 * 4 * 5
        assert all(r.auroc == 1.0 for r in records)
