"""
Tests for window-sliding prototype matching.
"""

import numpy as np
import pytest

from shared.errors import DatasetError, ShapeMismatchError, WindowConfigError
from spmamba.autodiff import Tensor
from spmamba.prototype import (
    PrototypeBank,
    assemble_final_prototype,
    init_prototypes,
    nearest_prototype_index,
    upsample_distance,
    window_cardinality,
    window_distance,
)


def cosine(a, b):
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return float(a @ b / denom) if denom > 0 else 0.0


def brute_force_similarity(bank, feature, p):
    """(B, K, h, w) best windowed similarity per prototype, by explicit loops."""
    k_count, h, w, _ = bank.shape
    r = p // 2
    out = np.full((feature.shape[0], k_count, h, w), -np.inf)
    for b in range(feature.shape[0]):
        for k in range(k_count):
            for i in range(h):
                for j in range(w):
                    for u in range(max(0, i - r), min(h, i + r + 1)):
                        for v in range(max(0, j - r), min(w, j + r + 1)):
                            out[b, k, i, j] = max(out[b, k, i, j], cosine(bank[k, i, j], feature[b, u, v]))
    return out


@pytest.fixture
def random_instance(rng, float64):
    bank = rng.normal(size=(2, 4, 4, 8))
    feature = rng.normal(size=(2, 4, 4, 8))
    return bank, feature


class TestWindowDistance:
    def test_matches_brute_force(self, random_instance):
        bank, feature = random_instance
        expected = (1.0 - brute_force_similarity(bank, feature, 3)).min(axis=1)
        out = window_distance(Tensor(bank), Tensor(feature), 3)
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    @pytest.mark.parametrize("case", range(100))
    def test_matches_brute_force_on_random_shapes(self, case, float64):
        gen = np.random.default_rng(case)
        side = int(gen.integers(1, 6))
        p = int(gen.choice([q for q in (1, 3, 5) if q <= side]))
        k, batch, c = (int(v) for v in gen.integers(1, 4, size=3))
        bank = gen.normal(size=(k, side, side, c))
        feature = gen.normal(size=(batch, side, side, c))
        expected = (1.0 - brute_force_similarity(bank, feature, p)).min(axis=1)
        np.testing.assert_allclose(window_distance(Tensor(bank), Tensor(feature), p).data, expected, atol=1e-12)

    def test_window_of_one(self, random_instance):
        bank, feature = random_instance
        expected = (1.0 - brute_force_similarity(bank, feature, 1)).min(axis=1)
        np.testing.assert_allclose(window_distance(Tensor(bank), Tensor(feature), 1).data, expected, atol=1e-12)

    def test_self_bank_is_zero(self, random_instance):
        _, feature = random_instance
        out = window_distance(Tensor(feature[:1]), Tensor(feature[:1]), 3)
        np.testing.assert_allclose(out.data, 0.0, atol=1e-12)

    def test_range(self, random_instance):
        bank, feature = random_instance
        out = window_distance(Tensor(bank), Tensor(feature), 3).data
        assert np.all(out >= 0.0) and np.all(out <= 2.0)

    def test_shifted_feature_still_matches(self, float64, rng):
        # a one-cell shift stays inside a 3x3 window
        grid = rng.normal(size=(6, 6, 4))
        shifted = np.roll(grid, 1, axis=1)
        out = window_distance(Tensor(grid[None]), Tensor(shifted[None]), 3).data
        np.testing.assert_allclose(out[0, :, 1:-1], 0.0, atol=1e-12)

    @pytest.mark.parametrize("p", [0, 2, 5])
    def test_bad_window(self, p):
        with pytest.raises(WindowConfigError):
            window_distance(Tensor(np.ones((1, 4, 4, 2))), Tensor(np.ones((1, 4, 4, 2))), p)


class TestCardinality:
    def test_corner_edge_interior(self):
        card = window_cardinality(4, 4, 3)
        assert card[0, 0] == 4
        assert card[0, 1] == 6
        assert card[1, 1] == 9

    def test_window_of_one(self):
        np.testing.assert_array_equal(window_cardinality(3, 3, 1), np.ones((3, 3)))


class TestNearestPrototype:
    def test_single_prototype(self, random_instance):
        bank, feature = random_instance
        np.testing.assert_array_equal(nearest_prototype_index(Tensor(bank[:1]), Tensor(feature), 3), 0)
        final = assemble_final_prototype(Tensor(bank[:1]), Tensor(feature), 3)
        np.testing.assert_array_equal(final[0], bank[0])

    def test_prototype_equal_to_feature_wins(self, random_instance):
        bank, feature = random_instance
        stacked = np.stack([bank[0], feature[0]])
        np.testing.assert_array_equal(nearest_prototype_index(Tensor(stacked), Tensor(feature[:1]), 3), 1)

    def test_matches_argmax_oracle(self, random_instance):
        bank, feature = random_instance
        expected = brute_force_similarity(bank, feature, 3).argmax(axis=1)
        np.testing.assert_array_equal(nearest_prototype_index(Tensor(bank), Tensor(feature), 3), expected)


class TestUpsample:
    def test_constant(self):
        out = upsample_distance(Tensor(np.full((1, 4, 4), 0.3)), 16, 16)
        np.testing.assert_allclose(out.data, 0.3, rtol=1e-6)

    def test_two_by_two(self, float64):
        out = upsample_distance(Tensor(np.array([[[0.0, 1.0], [1.0, 0.0]]])), 4, 4).data[0]
        assert out[0, 0] == 0.0 and out[3, 3] == 0.0
        assert out[0, 3] == 1.0 and out[3, 0] == 1.0
        assert 0.0 < out[1, 1] < 1.0

    def test_size_must_be_multiple(self):
        with pytest.raises(ShapeMismatchError):
            upsample_distance(Tensor(np.zeros((1, 4, 4))), 10, 10)


class TestInit:
    def test_all_samples_used(self):
        samples = np.arange(3 * 2 * 2 * 1, dtype=float).reshape(3, 2, 2, 1)
        chosen = init_prototypes(samples, 3, seed=0)
        assert sorted(chosen[:, 0, 0, 0]) == sorted(samples[:, 0, 0, 0])

    def test_deterministic(self, rng):
        samples = rng.normal(size=(10, 4, 4, 2))
        np.testing.assert_array_equal(init_prototypes(samples, 4, 5), init_prototypes(samples, 4, 5))

    def test_not_enough_samples(self):
        with pytest.raises(DatasetError):
            init_prototypes(np.zeros((1, 4, 4, 2)), 2, seed=0)

    def test_beats_a_noise_bank(self, rng, float64):
        template = rng.normal(size=(1, 4, 4, 8))
        samples = template + 0.3 * rng.normal(size=(6, 4, 4, 8))
        seeded = init_prototypes(samples, 2, seed=0)
        noise = rng.normal(size=(2, 4, 4, 8))
        ours = window_distance(Tensor(seeded), Tensor(samples), 3).data.mean()
        theirs = window_distance(Tensor(noise), Tensor(samples), 3).data.mean()
        assert ours < theirs

    def test_bank_loads_samples(self, rng):
        bank = PrototypeBank(2, 4, 3, window=3)
        samples = rng.normal(size=(5, 4, 4, 3))
        bank.load_samples(samples, seed=1)
        assert bank.num_prototypes == 2
        assert bank.bank.requires_grad
        assert bank(Tensor(samples[:1])).shape == (1, 4, 4)

    def test_bank_rejects_oversized_window(self):
        with pytest.raises(WindowConfigError):
            PrototypeBank(2, 4, 3, window=5)
