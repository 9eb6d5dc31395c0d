"""Motion stream: learned contrast maps, spotlight frame differencing, pooling-based cleanup."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .layers import Conv2d
from .tensor import (
    ConvSpec,
    ParamStore,
    ShapeError,
    Tensor,
    avg_pool2d,
    bilinear_resize,
    concat_depth,
    max_pool2d,
    relu,
    subtract,
)

LUMA = np.array([0.299, 0.587, 0.114])


def to_luminance(patch: Tensor) -> Tensor:
    """Replace RGB by its luminance on all three channels (keeps parameter shapes)."""
    y = np.tensordot(LUMA.astype(patch.dtype), patch.data, axes=([0], [1]))[:, None]
    return Tensor(np.repeat(y, 3, axis=1))


def bsfe(o_sf: Tensor, pool_kernels: Sequence[int] = (3, 5, 7)) -> Tensor:
    """Max-pool cascade minus avg-pool cascade (stride 2 each), resized back to input size."""
    if o_sf.ndim != 4 or o_sf.shape[1] != 1:
        raise ShapeError(f"bsfe expects a single-channel map, got {o_sf.shape}")
    h, w = o_sf.shape[2:]
    enh = sup = o_sf
    for k in pool_kernels:
        enh = max_pool2d(enh, k, 2, (k - 1) // 2)
        sup = avg_pool2d(sup, k, 2, (k - 1) // 2)
    return bilinear_resize(subtract(enh, sup), h, w)


class MNet:
    def __init__(self, store: ParamStore, rng: np.random.Generator, contrast_kernels=(7, 5, 3),
                 spotlight_kernels=(3, 5, 7), pool_kernels=(3, 5, 7), luminance: bool = False,
                 prefix: str = "mnet", dtype=np.float32):
        self.contrast_layers = [Conv2d(store, f"{prefix}.contrast{i + 1}", ConvSpec.same(k, 3, 3), rng, dtype)
                                for i, k in enumerate(contrast_kernels)]
        self.spot_layers = [Conv2d(store, f"{prefix}.spot{k}", ConvSpec.same(k, 3, 1), rng, dtype)
                            for k in spotlight_kernels]
        self.spot_fuse = Conv2d(store, f"{prefix}.spot_fuse", ConvSpec((1, 1), len(spotlight_kernels), 1), rng, dtype)
        self.pool_kernels = tuple(pool_kernels)
        self.luminance = luminance

    def check_geometry(self, size: int) -> None:
        for layer in self.contrast_layers + self.spot_layers:
            layer.check_preserves(size, size)
        s = size
        for k in self.pool_kernels:
            s = (s + 2 * ((k - 1) // 2) - k) // 2 + 1
        if s * 2 ** len(self.pool_kernels) != size:
            raise ShapeError(f"ROI size {size} is not reduced exactly {2 ** len(self.pool_kernels)}x by the pooling cascade")

    def contrast(self, patch: Tensor) -> Tensor:
        if patch.ndim != 4 or patch.shape[1] != 3:
            raise ShapeError(f"contrast expects (n, 3, H, W) patches, got {patch.shape}")
        x = to_luminance(patch) if self.luminance else patch
        for layer in self.contrast_layers:
            x = relu(layer(x))
        return x

    def spotlight(self, zc_t: Tensor, zc_prev: Tensor) -> Tensor:
        diff = subtract(zc_t, zc_prev)
        return self.spot_fuse(concat_depth([layer(diff) for layer in self.spot_layers]))

    def bsfe(self, o_sf: Tensor) -> Tensor:
        return bsfe(o_sf, self.pool_kernels)

    def forward(self, roi_t: Tensor, roi_prev: Tensor) -> Tensor:
        """O_M: single-channel motion response at ROI size."""
        return self.bsfe(self.spotlight(self.contrast(roi_t), self.contrast(roi_prev)))

    __call__ = forward
