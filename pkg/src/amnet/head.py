"""Fusion of the two response maps, Gaussian targets and the ridge loss."""

from __future__ import annotations

import numpy as np

from .layers import Conv2d
from .tensor import (
    ConvSpec,
    ParamStore,
    ShapeError,
    Tensor,
    bilinear_resize,
    concat_depth,
    mean,
    sigmoid,
    square,
    subtract,
)


class FusionHead:
    """Resize O_A to ROI size, stack with O_M, 1x1 conv, sigmoid."""

    def __init__(self, store: ParamStore, rng: np.random.Generator, prefix: str = "head", dtype=np.float32):
        self.conv = Conv2d(store, f"{prefix}.fuse", ConvSpec((1, 1), 2, 1), rng, dtype)

    def __call__(self, o_a: Tensor, o_m: Tensor) -> Tensor:
        if o_a.ndim != 4 or o_m.ndim != 4 or o_a.shape[1] != 1 or o_m.shape[1] != 1:
            raise ShapeError(f"fuse expects single-channel maps, got {o_a.shape} and {o_m.shape}")
        if o_a.shape[0] != o_m.shape[0]:
            raise ShapeError(f"fuse: batch sizes differ, {o_a.shape} vs {o_m.shape}")
        h, w = o_m.shape[2:]
        return sigmoid(self.conv(concat_depth([bilinear_resize(o_a, h, w), o_m])))


def gaussian_gt(peak_rc, sigma: float, size: int | tuple[int, int] = 192, dtype=np.float32) -> np.ndarray:
    """exp(-d^2 / (2 sigma^2)) around ``peak_rc`` on a (size, size) grid of pixel indices."""
    h, w = (size, size) if np.isscalar(size) else size
    pr, pc = float(peak_rc[0]), float(peak_rc[1])
    if not (0 <= pr < h and 0 <= pc < w):
        raise ValueError(f"peak {peak_rc} lies outside the {h}x{w} map")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = (np.arange(h) - pr)[:, None]
    c = (np.arange(w) - pc)[None, :]
    return np.exp(-(r * r + c * c) / (2.0 * sigma * sigma)).astype(dtype)


def gt_sigma(box_w: float, box_h: float, factor: float = 0.1) -> float:
    """Peak width from target size, both measured in ROI pixels."""
    return factor * float(np.sqrt(box_w * box_h))


def ridge_loss(o_am: Tensor, o_gt: Tensor) -> Tensor:
    """Mean squared difference over every element of the map batch.

    Regularization is not part of this value; it is applied as weight decay in the
    optimizer.
    """
    if o_am.shape != o_gt.shape:
        raise ShapeError(f"ridge_loss: prediction {o_am.shape} and target {o_gt.shape} differ")
    return mean(square(subtract(o_am, o_gt)))
