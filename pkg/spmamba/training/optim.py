"""
AdamW with parameter groups.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from shared.config import TrainSettings
from shared.errors import CheckpointError, NonFiniteGradientError

from ..autodiff import Tensor
from ..nn import Module, is_no_decay


@dataclass
class ParamGroup:
    name: str
    params: List[Tuple[str, Tensor]]
    weight_decay: float


@dataclass
class AdamWState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def parameter_groups(module: Module, weight_decay: float) -> List[ParamGroup]:
    """``decay`` for weights, ``no_decay`` for norms, biases, scan constants and prototypes."""
    decay, no_decay = [], []
    for name, p in module.named_parameters():
        (no_decay if is_no_decay(name) else decay).append((name, p))
    return [ParamGroup("decay", decay, weight_decay), ParamGroup("no_decay", no_decay, 0.0)]


def adamw_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, Optional[np.ndarray]],
    state: AdamWState,
    lr: float,
    weight_decay: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> Tuple[Dict[str, np.ndarray], AdamWState]:
    """
    One decoupled-decay Adam update.

    The decay shrinks the parameter first, then the bias-corrected moment
    step is applied. A missing gradient counts as zero.

    Raises:
        NonFiniteGradientError: any gradient holds NaN or Inf (nothing is updated)
    """
    bad = [name for name, g in grads.items() if g is not None and not np.all(np.isfinite(g))]
    if bad:
        raise NonFiniteGradientError(bad)

    beta1, beta2 = betas
    t = state.step + 1
    m_new, v_new, updated = dict(state.m), dict(state.v), {}
    for name, value in params.items():
        g = grads.get(name)
        g = np.zeros_like(value) if g is None else g.astype(value.dtype, copy=False)
        m = beta1 * state.m.get(name, np.zeros_like(value)) + (1 - beta1) * g
        v = beta2 * state.v.get(name, np.zeros_like(value)) + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        decayed = value * (1 - lr * weight_decay)
        updated[name] = (decayed - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(value.dtype, copy=False)
        m_new[name] = m.astype(value.dtype, copy=False)
        v_new[name] = v.astype(value.dtype, copy=False)
    return updated, AdamWState(step=t, m=m_new, v=v_new)


class AdamW:
    """Applies ``adamw_step`` to every group, in place on the parameters."""

    def __init__(self, groups: List[ParamGroup], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.groups = groups
        self.lr = lr
        self.betas = tuple(betas)
        self.eps = eps
        self.states: Dict[str, AdamWState] = {g.name: AdamWState() for g in groups}

    @classmethod
    def from_settings(cls, module: Module, settings: TrainSettings) -> "AdamW":
        return cls(
            parameter_groups(module, settings.weight_decay),
            lr=settings.learning_rate,
            betas=(settings.beta1, settings.beta2),
            eps=settings.adam_eps,
        )

    @property
    def step_count(self) -> int:
        return max((s.step for s in self.states.values()), default=0)

    def step(self) -> None:
        bad = [
            name for group in self.groups for name, p in group.params
            if p.grad is not None and not np.all(np.isfinite(p.grad))
        ]
        if bad:
            raise NonFiniteGradientError(bad)

        for group in self.groups:
            params = {name: p.data for name, p in group.params}
            grads = {name: p.grad for name, p in group.params}
            updated, self.states[group.name] = adamw_step(
                params, grads, self.states[group.name], self.lr, group.weight_decay, self.betas, self.eps
            )
            for name, p in group.params:
                p.data = updated[name]

    def zero_grad(self) -> None:
        for group in self.groups:
            for _, p in group.params:
                p.grad = None

    def state_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {}
        for group in self.groups:
            state = self.states[group.name]
            for name in state.m:
                arrays[f"adam_m/{name}"] = state.m[name]
                arrays[f"adam_v/{name}"] = state.v[name]
        return arrays

    def steps(self) -> Dict[str, int]:
        return {name: state.step for name, state in self.states.items()}

    def load_state(self, steps: Dict[str, int], arrays: Dict[str, np.ndarray]) -> None:
        for group in self.groups:
            state = AdamWState(step=int(steps.get(group.name, 0)))
            for name, p in group.params:
                m, v = arrays.get(f"adam_m/{name}"), arrays.get(f"adam_v/{name}")
                if (m is None) != (v is None):
                    raise CheckpointError(f"optimizer moments for '{name}' are incomplete")
                if m is None:
                    if state.step:
                        raise CheckpointError(f"optimizer moments for '{name}' are missing")
                    continue
                if m.shape != p.shape or v.shape != p.shape:
                    raise CheckpointError(f"optimizer moments for '{name}' have the wrong shape")
                state.m[name] = np.array(m, dtype=p.dtype)
                state.v[name] = np.array(v, dtype=p.dtype)
            self.states[group.name] = state
