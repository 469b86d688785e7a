"""
Spatial-perception state-space (SPSS) block.

Channels-last grids (B, H, W, C). The Mamba branch scans the grid along
every configured Circular-Hilbert direction with one shared set of scan
parameters and averages the directions; the conv branch is two 3x3
convolutions. Output = layer_norm(x + mamba + conv).
"""

import math
from typing import Sequence

import numpy as np

from shared.errors import ShapeMismatchError

from .. import nn
from ..autodiff import Tensor
from ..autodiff import functional as F
from ..scan import ScanGrid, scan_order_stack
from .ops import selective_scan


def inverse_softplus(value: np.ndarray) -> np.ndarray:
    return value + np.log(-np.expm1(-value))


class MambaBranch(nn.Module):
    def __init__(self, rng: np.random.Generator, channels: int, expansion: int, state_dim: int, conv_kernel: int):
        inner = channels * expansion
        rank = math.ceil(channels / 16)
        self.channels, self.inner, self.state_dim = channels, inner, state_dim

        self.in_x = nn.Linear(rng, channels, inner)
        self.in_z = nn.Linear(rng, channels, inner)
        self.conv_weight = nn.parameter(nn.uniform_init(rng, (conv_kernel, inner), conv_kernel), "conv_weight")
        self.dt_down = nn.Linear(rng, inner, rank)
        self.dt_up = nn.Linear(rng, rank, inner)
        dt = np.exp(rng.uniform(np.log(1e-3), np.log(1e-1), size=inner))
        self.dt_bias = nn.parameter(inverse_softplus(dt), "dt_bias")
        self.proj_B = nn.Linear(rng, inner, state_dim)
        self.proj_C = nn.Linear(rng, inner, state_dim)
        self.A_log = nn.parameter(np.log(np.tile(np.arange(1, state_dim + 1, dtype=np.float64), (inner, 1))), "A_log")
        self.D = nn.parameter(np.ones(inner), "D")
        self.out = nn.Linear(rng, inner, channels)

    def __call__(self, seq: Tensor, orders: np.ndarray) -> Tensor:
        """seq: (B, L, C) row-major; orders: (n_dir, L)."""
        batch, length, _ = seq.shape
        n_dir = orders.shape[0]

        xs = F.gather_by_order(self.in_x(seq), orders, axis=1)
        xs = F.reshape(xs, (batch * n_dir, length, self.inner))
        xs = F.silu(F.depthwise_conv1d(xs, self.conv_weight))

        delta = F.softplus(F.bias_add(self.dt_up(self.dt_down(xs)), self.dt_bias))
        A = F.scalar_mul(F.exp(self.A_log), -1.0)
        y = selective_scan(xs, delta, A, self.proj_B(xs), self.proj_C(xs), self.D)

        y = F.scatter_by_order(F.reshape(y, (batch, n_dir, length, self.inner)), orders, axis=1)
        y = F.mean(y, axis=1)
        y = F.mul(y, F.silu(self.in_z(seq)))
        return self.out(y)


class ConvBranch(nn.Module):
    def __init__(self, rng: np.random.Generator, channels: int, reduction: int):
        hidden = max(1, channels // reduction)
        self.conv1 = nn.Conv2d(rng, channels, hidden, 3, padding=1)
        self.conv2 = nn.Conv2d(rng, hidden, channels, 3, padding=1)

    def __call__(self, x: Tensor) -> Tensor:
        return F.silu(self.conv2(F.silu(self.conv1(x))))


class SPSSBlock(nn.Module):
    def __init__(
        self,
        rng: np.random.Generator,
        channels: int,
        directions: Sequence[int],
        expansion: int = 2,
        state_dim: int = 16,
        conv_kernel: int = 4,
        reduction: int = 4,
    ):
        if not directions:
            raise ValueError("SPSS block needs at least one scan direction")
        self.channels = channels
        self.directions = tuple(directions)
        self.mamba = MambaBranch(rng, channels, expansion, state_dim, conv_kernel)
        self.conv = ConvBranch(rng, channels, reduction)
        self.norm = nn.LayerNorm(channels)

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[3] != self.channels:
            raise ShapeMismatchError("spss-block", f"input {x.shape}, expected (B, H, W, {self.channels})")
        batch, height, width, channels = x.shape
        orders = scan_order_stack(ScanGrid(height, width), self.directions)

        seq = F.reshape(x, (batch, height * width, channels))
        mamba = F.reshape(self.mamba(seq, orders), x.shape)
        return self.norm(F.add(F.add(x, mamba), self.conv(x)))
