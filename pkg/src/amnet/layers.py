"""Parameterized conv layer shared by all sub-networks."""

from __future__ import annotations

import numpy as np

from .tensor import ConvSpec, ParamStore, ShapeError, Tensor, conv2d, xavier_init


class Conv2d:
    """Conv layer whose weight/bias live in a :class:`ParamStore` under ``name``.

    The layer keeps references to the stored tensors, so two call sites using the
    same layer object share storage (this is how the Siamese branches tie weights).
    """

    def __init__(self, store: ParamStore, name: str, spec: ConvSpec, rng: np.random.Generator,
                 dtype=np.float32):
        self.name = name
        self.spec = spec
        self.weight = store.add(f"{name}.weight", Tensor(xavier_init(spec.weight_shape, rng, dtype)))
        self.bias = store.add(f"{name}.bias", Tensor(np.zeros(spec.out_channels, dtype=dtype)))

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, self.spec)

    def check_preserves(self, h: int, w: int) -> None:
        out = self.spec.output_size(h, w)
        if out != (h, w):
            raise ShapeError(f"{self.name}: {self.spec} maps {h}x{w} to {out[0]}x{out[1]}, expected size-preserving")

    def __repr__(self) -> str:
        return f"Conv2d({self.name}, {self.spec})"
