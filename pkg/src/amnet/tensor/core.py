"""Tensor value type and the recording tape used for reverse-mode differentiation.

Network tensors are 4-D ``(n, c, h, w)`` arrays in row-major order. Reductions
such as the loss produce 0-d tensors. The floating dtype (float32 or float64)
travels with the data; mixing the two promotes to float64.

Recording is opt-in: operations only build a graph while a :class:`Tape` is
active and at least one input requires a gradient. Outside a tape every op is a
plain numpy computation, which is what the tracker uses at inference time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand dimensions are incompatible for the requested operation."""


class UsageError(RuntimeError):
    """The differentiation API was used out of order."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_node")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        # (tape, record index) for op outputs; None for leaves
        self._node: tuple[Tape, int] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"


@dataclass
class _Record:
    out: Tensor
    inputs: tuple[Tensor, ...]
    # backward(grad_out, needs) -> one gradient (or None) per input
    backward: Callable[[np.ndarray, tuple[bool, ...]], Sequence[np.ndarray | None]]


class Tape:
    """Linear record of differentiable ops, replayed in reverse by :func:`backward`.

    Usage::

        with Tape():
            loss = model_loss(...)
        backward(loss)
    """

    _stack: list["Tape"] = []

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        Tape._stack.pop()

    @classmethod
    def active(cls) -> "Tape | None":
        return cls._stack[-1] if cls._stack else None

    def __len__(self) -> int:
        return len(self.records)


def record(out: Tensor, inputs: Sequence[Tensor], backward_fn) -> Tensor:
    """Attach ``out`` to the active tape if any input carries a gradient."""
    tape = Tape.active()
    if tape is None:
        return out
    inputs = tuple(inputs)
    if not any(t.requires_grad for t in inputs):
        return out
    out.requires_grad = True
    out._node = (tape, len(tape.records))
    tape.records.append(_Record(out, inputs, backward_fn))
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every gradient-carrying leaf.

    Leaves that do not require a gradient (input patches, constants) are left
    untouched. Repeated calls accumulate, so callers zero gradients between
    optimizer steps. The graph is released afterwards (records hold references
    back to their outputs, so keeping them would leave large cycles for the
    garbage collector); a second call on the same loss raises :class:`UsageError`.
    """
    if loss._node is None:
        raise UsageError("backward() called on a tensor with no recorded forward graph; "
                         "run the forward pass inside a Tape with parameters requiring grad")
    if loss.data.size != 1:
        raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")
    tape, index = loss._node
    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records[: index + 1]):
        g = pending.pop(id(rec.out), None)
        if g is None:
            continue
        needs = tuple(t.requires_grad for t in rec.inputs)
        grads = rec.backward(g, needs)
        for t, gi, need in zip(rec.inputs, grads, needs):
            if gi is None or not need:
                continue
            gi = np.asarray(gi, dtype=t.data.dtype).reshape(t.data.shape)
            if t._node is None:
                t.grad = gi.copy() if t.grad is None else t.grad + gi
            else:
                key = id(t)
                pending[key] = gi if key not in pending else pending[key] + gi
    for rec in tape.records:
        rec.out._node = None
    tape.records.clear()


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def result_dtype(*ts: Tensor):
    return np.result_type(*(t.data.dtype for t in ts))
