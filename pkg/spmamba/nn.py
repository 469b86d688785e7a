"""
Parameter containers shared by every learnable component.
"""

from typing import Dict, Iterator, List, Tuple

import numpy as np

from shared.errors import CheckpointError, missing_names

from .autodiff import Tensor
from .autodiff import functional as F

# Final name components that never receive weight decay
NO_DECAY_SUFFIXES = ("gain", "bias", "dt_bias", "A_log", "D", "bank")


class Module:
    """
    Base class for layers.

    Parameters are ``Tensor`` attributes with ``requires_grad`` set. Child
    modules can be attributes or lists of modules; names are dotted paths in
    attribute insertion order.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield prefix + attr, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{attr}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{attr}.{i}.")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = missing_names(params, state)
        unexpected = missing_names(state, params)
        if missing or unexpected:
            raise CheckpointError(f"parameter mismatch: missing {missing[:5]}, unexpected {unexpected[:5]}")
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise CheckpointError(f"parameter '{name}' has shape {value.shape}, expected {p.shape}")
            p.data = np.array(value, dtype=p.dtype, order="C")
            p.grad = None

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


def is_no_decay(name: str) -> bool:
    return name.rsplit(".", 1)[-1] in NO_DECAY_SUFFIXES


def parameter(data: np.ndarray, name: str) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform weights with variance 1/fan_in."""
    bound = np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv2d(Module):
    """Bias-free channels-last convolution."""

    def __init__(self, rng: np.random.Generator, in_channels: int, out_channels: int,
                 kernel: int, stride: int = 1, padding: int = 0):
        self.stride = stride
        self.padding = padding
        self.weight = parameter(
            uniform_init(rng, (kernel, kernel, in_channels, out_channels), kernel * kernel * in_channels),
            "weight",
        )

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, stride=self.stride, padding=self.padding)


class Linear(Module):
    """Bias-free projection over the last axis (also a 1x1 convolution on grids)."""

    def __init__(self, rng: np.random.Generator, in_features: int, out_features: int):
        self.weight = parameter(uniform_init(rng, (in_features, out_features), in_features), "weight")

    def __call__(self, x: Tensor) -> Tensor:
        return F.matmul(x, self.weight)


class LayerNorm(Module):
    def __init__(self, channels: int, eps: float = 1e-5):
        self.eps = eps
        self.gain = parameter(np.ones(channels), "gain")
        self.bias = parameter(np.zeros(channels), "bias")

    def __call__(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gain, self.bias, eps=self.eps)
