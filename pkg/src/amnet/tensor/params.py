"""Named parameter storage, Xavier initialization and the Adam update."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import Tensor


@dataclass
class Param:
    value: Tensor
    m: np.ndarray = field(default=None)  # type: ignore[assignment]
    v: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros_like(self.value.data)
        if self.v is None:
            self.v = np.zeros_like(self.value.data)

    @property
    def grad(self) -> np.ndarray | None:
        return self.value.grad


class ParamStore:
    """Ordered ``name -> Param`` map. Names are unique; tensors are shared, never copied.

    Network layers hold references to the same :class:`Tensor` objects stored here,
    so an optimizer step is immediately visible to every branch using a parameter.
    """

    def __init__(self):
        self._params: "OrderedDict[str, Param]" = OrderedDict()
        self.step = 0

    def add(self, name: str, value: Tensor) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        value.requires_grad = True
        value.name = name
        self._params[name] = Param(value)
        return value

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name].value

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return ((k, p.value) for k, p in self._params.items())

    def param(self, name: str) -> Param:
        return self._params[name]

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: p.value.shape for k, p in self._params.items()}

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.value.grad = None

    def astype(self, dtype) -> None:
        """Cast values (and optimizer moments) in place, keeping tensor identity."""
        for p in self._params.values():
            p.value.data = p.value.data.astype(dtype)
            p.m = p.m.astype(dtype)
            p.v = p.v.astype(dtype)
            if p.value.grad is not None:
                p.value.grad = p.value.grad.astype(dtype)

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, p.value.data.copy()) for k, p in self._params.items())

    def load_state_dict(self, state) -> None:
        missing = [k for k in self._params if k not in state]
        if missing:
            raise KeyError(f"missing parameters: {missing}")
        for k, p in self._params.items():
            arr = np.asarray(state[k])
            if arr.shape != p.value.shape:
                raise ValueError(f"{k}: expected shape {p.value.shape}, found {arr.shape}")
            p.value.data = arr.astype(p.value.dtype).copy()

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(p.value.data.astype(np.float64) ** 2)) for p in self._params.values())))


def xavier_init(dims: tuple[int, ...], rng_seed, dtype=np.float32) -> np.ndarray:
    """Glorot-uniform sample on [-a, a], a = sqrt(6 / (fan_in + fan_out)).

    For a conv weight (out, in, kh, kw) the fans are in*kh*kw and out*kh*kw.
    ``rng_seed`` may be an int or a ``numpy.random.Generator``.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or min(dims) < 1:
        raise ValueError(f"xavier_init needs at least 2 positive dims, got {dims}")
    receptive = int(np.prod(dims[2:])) if len(dims) > 2 else 1
    fan_in, fan_out = dims[1] * receptive, dims[0] * receptive
    a = np.sqrt(6.0 / (fan_in + fan_out))
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return rng.uniform(-a, a, size=dims).astype(dtype)


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, weight_decay: float = 0.0, decoupled: bool = False) -> ParamStore:
    """One bias-corrected Adam update.

    By default weight decay enters as an L2 term on the raw gradient, before the
    moment updates. With ``decoupled=True`` it is instead applied directly to the
    weights as ``w -= lr * weight_decay * w`` (AdamW style), so it is not rescaled
    by the second-moment normalisation. Parameters without a gradient are treated
    as having a zero data gradient.
    """
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name in store:
        p = store.param(name)
        w = p.value.data
        g = p.value.grad if p.value.grad is not None else np.zeros_like(w)
        if weight_decay and not decoupled:
            g = g + weight_decay * w
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * g * g
        m_hat = p.m / c1
        v_hat = p.v / c2
        step = lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay and decoupled:
            step = step + lr * weight_decay * w
        p.value.data = (w - step).astype(w.dtype)
    return store
