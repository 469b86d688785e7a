"""
Dense tensors and the gradient tape.

A ``Tensor`` wraps a row-major numpy array. Primitive applications are
recorded on the active ``Tape`` whenever one of their inputs requires a
gradient; ``backward`` replays the tape in reverse and accumulates
gradients into the leaves.
"""

import threading
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from shared.errors import ShapeMismatchError, TapeError

_DTYPES = {32: np.float32, 64: np.float64}
_state = threading.local()

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


def get_precision() -> int:
    """Bit width used for newly created tensors in this thread."""
    return getattr(_state, "precision", 32)


def set_precision(bits: int) -> None:
    if bits not in _DTYPES:
        raise ValueError(f"precision must be 32 or 64, got {bits}")
    _state.precision = bits


@contextmanager
def precision(bits: int) -> Iterator[None]:
    """Temporarily switch the precision mode (64-bit for gradient checks)."""
    previous = get_precision()
    set_precision(bits)
    try:
        yield
    finally:
        set_precision(previous)


def default_dtype() -> np.dtype:
    return np.dtype(_DTYPES[get_precision()])


def _row_major(data) -> np.ndarray:
    # np.ascontiguousarray promotes 0-d arrays to shape (1,) before numpy 2.3
    arr = np.asarray(data)
    return arr if arr.flags.c_contiguous else arr.copy(order="C")


class Tensor:
    """N-dimensional array with an optional gradient."""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        self.data = _row_major(np.asarray(data, dtype=dtype or default_dtype()))
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @classmethod
    def wrap(cls, data: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap an array that already has the right dtype (no cast)."""
        out = cls.__new__(cls)
        out.data = _row_major(data)
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError("item", f"tensor of shape {self.shape} is not a scalar")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor.wrap(self.data.copy())

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the functional layer does the work
    def __add__(self, other):
        from . import functional as F
        return F.add(self, other) if isinstance(other, Tensor) else F.scalar_add(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        from . import functional as F
        return F.sub(self, other) if isinstance(other, Tensor) else F.scalar_add(self, -float(other))

    def __mul__(self, other):
        from . import functional as F
        return F.mul(self, other) if isinstance(other, Tensor) else F.scalar_mul(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        from . import functional as F
        return F.scalar_mul(self, -1.0)

    def __matmul__(self, other):
        from . import functional as F
        return F.matmul(self, other)


@dataclass
class TapeNode:
    """One recorded primitive application."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """
    Ordered record of primitive applications.

    Nodes are appended in execution order, which is a topological order of
    the graph. A tape is single-use: ``backward`` consumes it.
    """

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.consumed = False

    def record(self, node: TapeNode) -> None:
        if self.consumed:
            raise TapeError("cannot record on a consumed tape")
        self.nodes.append(node)

    def __len__(self) -> int:
        return len(self.nodes)

    def __enter__(self) -> "Tape":
        stack = _tape_stack()
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()


def _tape_stack() -> List[Tape]:
    stack = getattr(_state, "tapes", None)
    if stack is None:
        stack = []
        _state.tapes = stack
    return stack


def active_tape() -> Optional[Tape]:
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def no_tape() -> Iterator[None]:
    """Evaluate without recording, even inside an active tape."""
    stack = _tape_stack()
    saved = list(stack)
    stack.clear()
    try:
        yield
    finally:
        stack.extend(saved)


class Function(ABC):
    """
    Base class for differentiable primitives.

    Subclasses implement ``forward`` on raw arrays and ``backward`` returning
    one gradient (or ``None``) per input tensor. Non-tensor arguments are
    passed to ``forward`` as keyword arguments and kept on the instance.
    """

    op_name = "function"

    def __init__(self, *tensors: Tensor):
        self.tensors = tensors

    @abstractmethod
    def forward(self, *args: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError("Forward pass not implemented for this function")

    @abstractmethod
    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError("Backward pass not implemented for this function")

    @classmethod
    def apply(cls, *tensors: Tensor, **kwargs: Any) -> Tensor:
        """Run ``forward`` and record the application on the active tape."""
        func = cls(*tensors)
        out_data = func.forward(*(inp.data for inp in tensors), **kwargs)
        out = Tensor.wrap(np.asarray(out_data, dtype=tensors[0].data.dtype))

        tape = active_tape()
        if tape is not None and any(inp.requires_grad for inp in tensors):
            out.requires_grad = True
            tape.record(TapeNode(cls.op_name, tuple(tensors), out, func.backward))
        return out


def backward(tape: Tape, loss: Tensor, leaves: Optional[Iterable[Tensor]] = None) -> Dict[Tensor, np.ndarray]:
    """
    Reverse-mode sweep over ``tape`` starting from a scalar ``loss``.

    Every requires-grad leaf reached by the tape, plus any tensor listed in
    ``leaves``, gets its ``.grad`` set; leaves that do not contribute get zeros.

    Returns:
        Mapping leaf tensor -> gradient array
    """
    if tape.consumed:
        raise TapeError("tape already consumed")
    if loss.data.size != 1:
        raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    produced = {id(node.output) for node in tape.nodes}
    if id(loss) not in produced:
        raise TapeError("loss was not produced on this tape")

    found: Dict[int, Tensor] = {}
    for node in tape.nodes:
        for inp in node.inputs:
            if inp.requires_grad and id(inp) not in produced:
                found.setdefault(id(inp), inp)
    for leaf in leaves or ():
        found.setdefault(id(leaf), leaf)

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        for inp, g in zip(node.inputs, node.backward(upstream)):
            if g is None or not inp.requires_grad:
                continue
            key = id(inp)
            grads[key] = grads[key] + g if key in grads else g

    tape.consumed = True
    tape.nodes = []

    result: Dict[Tensor, np.ndarray] = {}
    for key, leaf in found.items():
        g = grads.get(key)
        leaf.grad = np.zeros_like(leaf.data) if g is None else np.asarray(g, dtype=leaf.data.dtype).reshape(leaf.shape)
        result[leaf] = leaf.grad
    return result
