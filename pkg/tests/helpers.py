"""
Gradient-check helper shared by the autodiff and model tests.
"""

from typing import Callable, Sequence

import numpy as np

from spmamba.autodiff import Tape, Tensor, backward, finite_diff_grad, precision, relative_error
from spmamba.autodiff import functional as F


def check_gradients(
    fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    tolerance: float = 1e-5,
    floor: float = 1e-6,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """
    Backward of ``sum(fn(*inputs) * w)`` for a fixed random ``w`` against
    central differences, every input and every coordinate, in 64-bit mode.

    Returns the worst relative error.
    """
    with precision(64):
        inputs = [np.asarray(a, dtype=np.float64) for a in arrays]
        probe = fn(*[Tensor(a) for a in inputs])
        weights = Tensor(np.random.default_rng(seed).normal(size=probe.shape))

        def scalar(*tensors):
            return F.sum(F.mul(fn(*tensors), weights))

        tensors = [Tensor(a, requires_grad=True) for a in inputs]
        with Tape() as tape:
            out = scalar(*tensors)
        backward(tape, out, leaves=tensors)

        worst = 0.0
        for i, tensor in enumerate(tensors):
            def f(x, i=i):
                args = [Tensor(x) if j == i else Tensor(a) for j, a in enumerate(inputs)]
                return scalar(*args).item()

            numeric = finite_diff_grad(f, inputs[i], step=step)
            err = float(relative_error(tensor.grad, numeric, floor).max())
            assert err <= tolerance, f"input {i}: relative error {err:.3e} > {tolerance}"
            worst = max(worst, err)
    return worst
