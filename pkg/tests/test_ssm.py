"""
Tests for selective-scan kernels, SPSS blocks and the decoder.
"""

import numpy as np
import pytest

from shared.config import load_config
from shared.errors import NonFiniteValueError, ShapeMismatchError
from spmamba.autodiff import Tensor, precision
from spmamba.autodiff import functional as F
from spmamba.autodiff.tensor import Tape, backward
from spmamba.model import build_model
from spmamba.scan import ScanDirection
from spmamba.ssm import (
    SPSSBlock,
    SPSSDecoder,
    discretize,
    format_csv,
    linear_recurrence,
    scan_runtime_benchmark,
    selective_scan,
    selective_scan_parallel,
    selective_scan_sequential,
)


def random_scan(rng, length, channels=3, state=4, batch=2, dtype=np.float64):
    a_bar = rng.uniform(0.2, 0.8, size=(batch, length, channels, state))
    b_bar = rng.uniform(-0.5, 0.5, size=a_bar.shape)
    C = rng.uniform(-1.0, 1.0, size=(batch, length, state))
    x = rng.uniform(-0.5, 0.5, size=(batch, length, channels))
    d_skip = rng.uniform(-1.0, 1.0, size=channels)
    return tuple(arr.astype(dtype) for arr in (a_bar, b_bar, C, x, d_skip))


class TestDiscretize:
    def test_small_step_limit(self):
        A = -np.ones((2, 3))
        B = np.ones((1, 4, 3))
        delta = np.full((1, 4, 2), 1e-12)
        a_bar, b_bar = discretize(A, B, delta)
        np.testing.assert_allclose(a_bar, 1.0, atol=1e-11)
        np.testing.assert_allclose(b_bar, 0.0, atol=1e-11)

    def test_closed_form(self):
        A = np.array([[-1.0, -2.0]])
        B = np.array([[[3.0, 5.0]]])
        delta = np.array([[[0.5]]])
        a_bar, b_bar = discretize(A, B, delta)
        np.testing.assert_allclose(a_bar[0, 0, 0], np.exp([-0.5, -1.0]))
        np.testing.assert_allclose(b_bar[0, 0, 0], [1.5, 2.5])

    def test_non_finite(self):
        with pytest.raises(NonFiniteValueError):
            discretize(-np.ones((1, 1)), np.ones((1, 1, 1)), np.full((1, 1, 1), np.nan))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            discretize(-np.ones((2, 3)), np.ones((1, 4, 2)), np.ones((1, 4, 2)))


class TestSequentialScan:
    def test_memoryless(self, rng):
        _, b_bar, C, x, _ = random_scan(rng, 6)
        y = selective_scan_sequential(np.zeros_like(b_bar), b_bar, C, x, np.zeros(3))
        expected = np.einsum("blen,bln->ble", b_bar * x[..., None], C)
        np.testing.assert_allclose(y, expected, rtol=1e-12)

    def test_running_count(self):
        shape = (1, 5, 1, 1)
        y = selective_scan_sequential(np.ones(shape), np.ones(shape), np.ones((1, 5, 1)), np.ones((1, 5, 1)), np.zeros(1))
        np.testing.assert_array_equal(y[0, :, 0], [1, 2, 3, 4, 5])

    def test_skip_term(self, rng):
        a_bar, b_bar, C, x, _ = random_scan(rng, 4)
        without = selective_scan_sequential(a_bar, b_bar, C, x, np.zeros(3))
        with_skip = selective_scan_sequential(a_bar, b_bar, C, x, np.full(3, 2.0))
        np.testing.assert_allclose(with_skip - without, 2.0 * x, atol=1e-12)

    def test_shape_mismatch(self, rng):
        a_bar, b_bar, C, x, d = random_scan(rng, 4)
        with pytest.raises(ShapeMismatchError):
            selective_scan_sequential(a_bar, b_bar, C[:, :3], x, d)


class TestParallelScan:
    def test_length_one_exact(self, rng):
        args = random_scan(rng, 1)
        np.testing.assert_array_equal(selective_scan_parallel(*args), selective_scan_sequential(*args))

    @pytest.mark.parametrize("length", [2, 3, 16, 17, 100, 256, 1024])
    def test_matches_sequential_64_bit(self, rng, length):
        args = random_scan(rng, length)
        diff = np.abs(selective_scan_parallel(*args) - selective_scan_sequential(*args)).max()
        assert diff <= 1e-10

    @pytest.mark.parametrize("length", [16, 300, 1024])
    def test_matches_sequential_32_bit(self, rng, length):
        args = random_scan(rng, length, dtype=np.float32)
        diff = np.abs(selective_scan_parallel(*args) - selective_scan_sequential(*args)).max()
        assert diff <= 1e-5

    def test_zero_input(self, rng):
        a_bar, b_bar, C, x, d = random_scan(rng, 9)
        y = selective_scan_parallel(a_bar, b_bar, C, np.zeros_like(x), d)
        np.testing.assert_array_equal(y, np.zeros_like(x))

    def test_linearity_in_x(self, rng):
        a_bar, b_bar, C, x, d = random_scan(rng, 12)
        x2 = rng.normal(size=x.shape)
        lhs = selective_scan_parallel(a_bar, b_bar, C, 2.0 * x + x2, d)
        rhs = 2.0 * selective_scan_parallel(a_bar, b_bar, C, x, d) + selective_scan_parallel(a_bar, b_bar, C, x2, d)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_linear_recurrence_along_axis(self, rng):
        a = rng.uniform(0.1, 0.9, size=(3, 7))
        b = rng.normal(size=(3, 7))
        h = linear_recurrence(a, b, axis=1)
        state = np.zeros(3)
        for t in range(7):
            state = a[:, t] * state + b[:, t]
            np.testing.assert_allclose(h[:, t], state, rtol=1e-12)


class TestSelectiveScanOp:
    def test_forward_matches_kernels(self, rng, float64):
        g, length, e, n = 2, 9, 3, 4
        x = rng.normal(size=(g, length, e))
        delta = rng.uniform(0.1, 1.0, size=x.shape)
        A = -rng.uniform(0.5, 2.0, size=(e, n))
        B = rng.normal(size=(g, length, n))
        C = rng.normal(size=(g, length, n))
        D = rng.normal(size=e)

        out = selective_scan(Tensor(x), Tensor(delta), Tensor(A), Tensor(B), Tensor(C), Tensor(D))
        a_bar, b_bar = discretize(A, B, delta)
        np.testing.assert_allclose(out.data, selective_scan_sequential(a_bar, b_bar, C, x, D), atol=1e-12)

    def test_shape_mismatch(self):
        t = Tensor(np.ones((1, 4, 2)))
        with pytest.raises(ShapeMismatchError):
            selective_scan(t, t, Tensor(-np.ones((3, 2))), Tensor(np.ones((1, 4, 2))), Tensor(np.ones((1, 4, 2))), Tensor(np.ones(2)))


class TestSPSSBlock:
    def test_shape_preserved(self, rng):
        block = SPSSBlock(rng, 4, [0, 5], expansion=2, state_dim=2, reduction=2)
        x = Tensor(rng.normal(size=(2, 4, 4, 4)))
        out = block(x)
        assert out.shape == x.shape
        assert np.all(np.isfinite(out.data))

    def test_wrong_channels(self, rng):
        block = SPSSBlock(rng, 4, [0], state_dim=2)
        with pytest.raises(ShapeMismatchError):
            block(Tensor(np.zeros((1, 4, 4, 3))))

    def test_needs_directions(self, rng):
        with pytest.raises(ValueError):
            SPSSBlock(rng, 4, [])

    def test_zero_projections_leave_normalized_residual(self, rng, float64):
        block = SPSSBlock(rng, 4, [0, 3], state_dim=2, reduction=2)
        block.mamba.out.weight.data = np.zeros_like(block.mamba.out.weight.data)
        block.conv.conv2.weight.data = np.zeros_like(block.conv.conv2.weight.data)
        x = rng.normal(size=(2, 4, 4, 4))
        expected = (x - x.mean(axis=-1, keepdims=True)) / np.sqrt(x.var(axis=-1, keepdims=True) + 1e-5)
        np.testing.assert_allclose(block(Tensor(x)).data, expected, atol=1e-12)

    def test_reversed_direction_is_not_redundant(self, float64):
        x = np.random.default_rng(7).normal(size=(1, 8, 8, 4))
        forward = ScanDirection.from_index(0)
        single = SPSSBlock(np.random.default_rng(3), 4, [forward.index], state_dim=2, reduction=2)
        pair = SPSSBlock(np.random.default_rng(3), 4, [forward.index, forward.reversed().index], state_dim=2, reduction=2)
        out_single, out_pair = single(Tensor(x)).data, pair(Tensor(x)).data
        assert np.max(np.abs(out_single - out_pair)) > 1e-6

    def test_gradients_reach_every_parameter(self, rng):
        with precision(64):
            block = SPSSBlock(rng, 4, [0, 1, 2, 3, 4, 5, 6, 7], state_dim=2, reduction=2)
            x = Tensor(rng.normal(size=(1, 4, 4, 4)))
            with Tape() as tape:
                loss = F.mean(F.mul(block(x), block(x)))
            grads = backward(tape, loss, leaves=block.parameters())
        assert all(np.all(np.isfinite(g)) for g in grads.values())
        assert sum(float(np.abs(g).sum()) > 0 for g in grads.values()) == len(block.parameters())


class TestDecoder:
    def test_pyramid_shapes(self, micro_config, rng):
        decoder = SPSSDecoder(rng, micro_config.model)
        pyramid = decoder(Tensor(rng.normal(size=(1, 8, 8, 4))))
        assert pyramid.shapes == [(1, 16, 16, 4), (1, 8, 8, 4), (1, 4, 4, 4)]

    def test_rejects_wrong_fused_shape(self, micro_config, rng):
        decoder = SPSSDecoder(rng, micro_config.model)
        with pytest.raises(ShapeMismatchError):
            decoder(Tensor(np.zeros((1, 4, 4, 4))))

    def test_toy_model_under_one_million_parameters(self):
        model = build_model(load_config(preset="toy"))
        assert model.num_parameters() <= 1_000_000


class TestBenchmark:
    def test_rows_and_csv(self):
        rows = scan_runtime_benchmark([16, 32], repeats=10, channels=2, state_dim=2)
        assert [row.length for row in rows] == [16, 32]
        assert all(row.median_ns > 0 for row in rows)
        text = format_csv(rows)
        assert text.splitlines()[0] == "L,median_ns"
        assert len(text.splitlines()) == 3

    def test_lengths_must_ascend(self):
        with pytest.raises(ValueError):
            scan_runtime_benchmark([64, 32])

    @pytest.mark.slow
    def test_runtime_grows_at_most_linearly(self):
        rows = scan_runtime_benchmark([16384, 32768], repeats=10)
        ratio = rows[1].median_ns / rows[0].median_ns
        assert ratio <= 2.5
