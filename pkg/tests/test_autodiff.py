"""
Tests for the tensor, tape and differentiable primitives.
"""

import numpy as np
import pytest

from shared.errors import NonFiniteValueError, ShapeMismatchError, TapeError
from spmamba.autodiff import (
    Stream,
    Tape,
    Tensor,
    backward,
    default_dtype,
    finite_diff_grad,
    generator,
    get_precision,
    no_tape,
    precision,
    relative_error,
)
from spmamba.autodiff import functional as F
from spmamba.prototype import window_distance
from spmamba.ssm import selective_scan

from .helpers import check_gradients


class TestTensor:
    def test_default_precision_is_32_bit(self):
        assert get_precision() == 32
        assert Tensor([1.0]).dtype == np.float32

    def test_precision_context_restores(self):
        with precision(64):
            assert default_dtype() == np.float64
            assert Tensor([1.0]).dtype == np.float64
        assert default_dtype() == np.float32

    def test_invalid_precision(self):
        with pytest.raises(ValueError):
            with precision(16):
                pass

    def test_item_requires_scalar(self):
        with pytest.raises(ShapeMismatchError):
            Tensor([1.0, 2.0]).item()


class TestForward:
    def test_silu_at_zero(self):
        assert F.silu(Tensor([0.0])).item() == 0.0

    def test_matmul_identity(self, rng):
        m = rng.normal(size=(3, 3))
        out = F.matmul(Tensor(np.eye(3)), Tensor(m))
        np.testing.assert_allclose(out.data, m, rtol=1e-6)

    def test_conv2d_ones(self):
        x = Tensor(np.ones((1, 5, 5, 1)))
        w = Tensor(np.ones((3, 3, 1, 1)))
        out = F.conv2d(x, w, stride=1, padding=0)
        assert out.shape == (1, 3, 3, 1)
        np.testing.assert_array_equal(out.data[0, :, :, 0], np.full((3, 3), 9.0))

    def test_conv2d_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            F.conv2d(Tensor(np.ones((1, 5, 5, 2))), Tensor(np.ones((3, 3, 1, 1))))

    def test_add_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            F.add(Tensor(np.ones(3)), Tensor(np.ones(4)))

    def test_causal_depthwise_conv1d(self):
        x = np.arange(1.0, 6.0).reshape(1, 5, 1)
        w = np.array([[1.0], [10.0]])
        out = F.depthwise_conv1d(Tensor(x), Tensor(w))
        # y_t = x_{t-1} + 10 x_t with x_{-1} = 0
        np.testing.assert_allclose(out.data[0, :, 0], [10, 21, 32, 43, 54])

    def test_gather_then_scatter_is_identity(self, rng):
        x = rng.normal(size=(2, 16, 3))
        order = rng.permutation(16)
        back = F.scatter_by_order(F.gather_by_order(Tensor(x), order), order)
        np.testing.assert_array_equal(back.data, Tensor(x).data)

    def test_bilinear_resize_keeps_corners(self):
        out = F.bilinear_resize(Tensor(np.array([[0.0, 1.0], [1.0, 0.0]])), 4, 4)
        assert out.data[0, 0] == pytest.approx(0.0)
        assert out.data[0, 3] == pytest.approx(1.0)
        assert out.data[3, 0] == pytest.approx(1.0)
        assert 0.0 < out.data[1, 1] < 1.0

    def test_cosine_similarity_zero_vector(self):
        out = F.cosine_similarity(Tensor(np.zeros((1, 3))), Tensor(np.ones((1, 3))))
        assert out.data[0] == 0.0


class TestBackward:
    def test_square(self, float64):
        x = Tensor([3.0], requires_grad=True)
        with Tape() as tape:
            y = F.sum(F.mul(x, x))
        backward(tape, y)
        assert x.grad[0] == pytest.approx(6.0)

    def test_mean(self, float64):
        x = Tensor(np.arange(4.0), requires_grad=True)
        with Tape() as tape:
            y = F.mean(x)
        assert y.shape == ()
        backward(tape, y)
        np.testing.assert_allclose(x.grad, [0.25] * 4)

    def test_full_reductions_are_scalars(self):
        x = Tensor(np.arange(6.0).reshape(2, 3))
        assert F.sum(x).shape == ()
        assert F.mean(x).shape == ()
        assert F.mse(x, x).shape == ()
        assert Tensor(2.0).shape == ()
        assert Tensor.wrap(np.float32(2.0)).shape == ()

    def test_fan_out_accumulates(self, float64):
        x = Tensor([2.0], requires_grad=True)
        with Tape() as tape:
            y = F.sum(F.add(F.mul(x, x), F.scalar_mul(x, 3.0)))
        backward(tape, y)
        assert x.grad[0] == pytest.approx(7.0)

    def test_unused_leaf_gets_zeros(self, float64):
        x = Tensor([1.0], requires_grad=True)
        unused = Tensor([5.0, 6.0], requires_grad=True)
        with Tape() as tape:
            y = F.sum(x)
        backward(tape, y, leaves=[unused])
        np.testing.assert_array_equal(unused.grad, [0.0, 0.0])

    def test_tape_consumed_once(self):
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            y = F.sum(x)
        backward(tape, y)
        with pytest.raises(TapeError):
            backward(tape, y)

    def test_non_scalar_loss(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = F.scalar_mul(x, 2.0)
        with pytest.raises(TapeError):
            backward(tape, y)

    def test_loss_from_another_tape(self):
        x = Tensor([1.0], requires_grad=True)
        with Tape():
            y = F.sum(x)
        with Tape() as other:
            F.sum(x)
        with pytest.raises(TapeError):
            backward(other, y)

    def test_no_tape_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            with no_tape():
                F.sum(x)
        assert len(tape) == 0

    def test_two_layer_network(self, rng):
        x = rng.normal(size=(4, 5))
        w1 = rng.normal(size=(5, 6)) * 0.5
        w2 = rng.normal(size=(6, 3)) * 0.5

        def net(x, w1, w2):
            return F.matmul(F.silu(F.matmul(x, w1)), w2)

        assert check_gradients(net, [x, w1, w2], tolerance=1e-6) <= 1e-6


class TestFiniteDifferences:
    def test_square(self):
        g = finite_diff_grad(lambda x: float(x[0] ** 2), np.array([3.0]))
        assert g[0] == pytest.approx(6.0, abs=1e-8)

    def test_silu_sum_at_zero(self):
        def f(x):
            with precision(64):
                return F.sum(F.silu(Tensor(x))).item()

        np.testing.assert_allclose(finite_diff_grad(f, np.zeros(3)), [0.5] * 3, atol=1e-9)

    def test_constant(self):
        np.testing.assert_array_equal(finite_diff_grad(lambda x: 1.0, np.ones(4)), np.zeros(4))

    def test_subset_of_coordinates(self):
        g = finite_diff_grad(lambda x: float(np.sum(x ** 2)), np.ones(3), indices=[(1,)])
        assert g[0] == 0.0 and g[2] == 0.0
        assert g[1] == pytest.approx(2.0)

    def test_non_finite(self):
        with pytest.raises(NonFiniteValueError):
            finite_diff_grad(lambda x: float("nan"), np.zeros(1))

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda x: 0.0, np.zeros(1), step=0.0)

    def test_relative_error_floor(self):
        assert relative_error(np.array([0.0]), np.array([1e-9]), floor=1e-6)[0] == pytest.approx(1e-3)


class TestPrimitiveGradients:
    """Every backward rule against central differences in 64-bit mode."""

    def test_elementwise(self, rng):
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        check_gradients(F.add, [a, b])
        check_gradients(F.sub, [a, b])
        check_gradients(F.mul, [a, b])
        check_gradients(lambda x: F.scalar_mul(x, -1.5), [a])
        check_gradients(lambda x: F.scalar_add(x, 2.0), [a])

    def test_bias_add_and_matmul(self, rng):
        check_gradients(F.bias_add, [rng.normal(size=(2, 3, 4)), rng.normal(size=4)])
        check_gradients(F.matmul, [rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 5))])

    @pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1)])
    def test_conv2d(self, rng, stride, padding):
        x = rng.normal(size=(2, 5, 5, 2))
        w = rng.normal(size=(3, 3, 2, 3))
        check_gradients(lambda x, w: F.conv2d(x, w, stride=stride, padding=padding), [x, w])

    def test_depthwise_conv1d(self, rng):
        check_gradients(F.depthwise_conv1d, [rng.normal(size=(2, 6, 3)), rng.normal(size=(4, 3))])

    def test_activations(self, rng):
        x = rng.normal(size=(3, 4))
        check_gradients(F.silu, [x])
        check_gradients(F.exp, [x])
        check_gradients(F.softplus, [x])

    def test_layer_norm(self, rng):
        x = rng.normal(size=(2, 3, 6))
        check_gradients(F.layer_norm, [x, rng.normal(size=6), rng.normal(size=6)])

    def test_reductions(self, rng):
        x = rng.normal(size=(2, 3, 4))
        check_gradients(F.mean, [x])
        check_gradients(lambda x: F.mean(x, axis=1), [x])
        check_gradients(lambda x: F.sum(x, axis=(0, 2), keepdims=True), [x])
        check_gradients(lambda x: F.max(x, axis=-1), [x])
        check_gradients(lambda x: F.min(x, axis=1), [x])

    def test_shape_ops(self, rng):
        x = rng.normal(size=(2, 3, 4))
        check_gradients(lambda x: F.reshape(x, (6, 4)), [x])
        check_gradients(lambda x: F.transpose(x, (2, 0, 1)), [x])

    def test_order_ops(self, rng):
        x = rng.normal(size=(2, 8, 3))
        order = rng.permutation(8)
        check_gradients(lambda x: F.gather_by_order(x, order), [x])
        check_gradients(lambda x: F.scatter_by_order(x, order), [x])

    def test_resampling(self, rng):
        x = rng.normal(size=(2, 3, 4, 4))
        check_gradients(lambda x: F.bilinear_resize(x, 7, 5), [x])
        check_gradients(lambda x: F.upsample_nearest(x), [rng.normal(size=(1, 3, 3, 2))])
        check_gradients(F.avg_pool2, [rng.normal(size=(1, 4, 4, 2))])

    def test_similarity_and_mse(self, rng):
        a, b = rng.normal(size=(3, 5)), rng.normal(size=(3, 5))
        check_gradients(F.cosine_similarity, [a, b])
        check_gradients(F.mse, [a, b])

    def test_selective_scan(self, rng):
        g, length, e, n = 2, 5, 3, 2
        x = rng.normal(size=(g, length, e))
        delta = rng.uniform(0.2, 1.0, size=(g, length, e))
        A = -rng.uniform(0.5, 2.0, size=(e, n))
        B = rng.normal(size=(g, length, n))
        C = rng.normal(size=(g, length, n))
        D = rng.normal(size=e)
        check_gradients(selective_scan, [x, delta, A, B, C, D])

    def test_window_distance(self, rng):
        bank = rng.normal(size=(2, 4, 4, 3))
        feature = rng.normal(size=(1, 4, 4, 3))
        check_gradients(lambda b, f: window_distance(b, f, 3), [bank, feature])


class TestStreams:
    def test_same_keys_same_draws(self):
        a = generator(7, Stream.SYNTH, 3).random(4)
        b = generator(7, Stream.SYNTH, 3).random(4)
        np.testing.assert_array_equal(a, b)

    def test_streams_are_independent(self):
        a = generator(7, Stream.SYNTH, 3).random(4)
        b = generator(7, Stream.PARAMS, 3).random(4)
        assert not np.array_equal(a, b)
