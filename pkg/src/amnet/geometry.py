"""Boxes, square crops and the ROI <-> image coordinate mapping.

Image coordinates are continuous with pixel ``i`` covering ``[i, i + 1)``. A crop
is described by its center and side in image pixels. Inside a resized ROI of
``size`` pixels, ROI coordinate ``(r, c)`` sits at image point
``center + ((c - size / 2) * s, (r - size / 2) * s)`` with ``s = side / size``;
the ROI center is therefore ``(size / 2, size / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box needs positive width and height, got {self}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box has non-finite coordinates: {self}")

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    def recentered(self, cx: float, cy: float) -> "BBox":
        return BBox.from_center(cx, cy, self.w, self.h)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def _axis_weights(start: float, side: float, out: int):
    """Bilinear taps for ``out`` samples spanning [start, start + side) on one axis.

    Returns (first source index, weight matrix (out, n_src)).
    """
    step = side / out
    # sample centers in pixel-index coordinates (pixel i has its center at i)
    pos = start + (np.arange(out) + 0.5) * step - 0.5
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    lo = int(i0.min())
    n_src = int(i0.max()) - lo + 2
    m = np.zeros((out, n_src))
    rows = np.arange(out)
    m[rows, i0 - lo] += 1.0 - frac
    m[rows, i0 - lo + 1] += frac
    return lo, m


def crop_resize(frame: np.ndarray, center, side: float, out_size: int, fill=None) -> np.ndarray:
    """Square crop of ``side`` pixels around ``center`` (x, y), bilinearly resized to ``out_size``.

    ``frame`` is (H, W, C); values outside the frame are the frame's per-channel mean.
    Returns float64 (out_size, out_size, C).
    """
    if not side > 0:
        raise ValueError(f"crop side must be positive, got {side}")
    img = np.asarray(frame, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, ch = img.shape
    mean = img.reshape(-1, ch).mean(axis=0) if fill is None else np.broadcast_to(np.asarray(fill, float), (ch,))
    cx, cy = float(center[0]), float(center[1])
    top, my = _axis_weights(cy - side / 2.0, side, out_size)
    left, mx = _axis_weights(cx - side / 2.0, side, out_size)
    nh, nw = my.shape[1], mx.shape[1]
    canvas = np.empty((nh, nw, ch))
    canvas[:] = mean
    ys, ye = max(top, 0), min(top + nh, h)
    xs, xe = max(left, 0), min(left + nw, w)
    if ys < ye and xs < xe:
        canvas[ys - top : ye - top, xs - left : xe - left] = img[ys:ye, xs:xe]
    return np.einsum("yh,hwc,xw->yxc", my, canvas, mx, optimize=True)


def to_tensor(patch: np.ndarray, scale: float = 1.0 / 255.0, dtype=np.float32) -> Tensor:
    """(H, W, 3) patch in 0..255 to a (1, 3, H, W) tensor in [0, 1]."""
    return Tensor((np.asarray(patch, dtype=np.float64) * scale).transpose(2, 0, 1)[None].astype(dtype))


def roi_to_image(rc, center, side: float, size: int) -> tuple[float, float]:
    """ROI coordinate (row, col) to image point (x, y)."""
    s = side / size
    return center[0] + (rc[1] - size / 2.0) * s, center[1] + (rc[0] - size / 2.0) * s


def image_to_roi(xy, center, side: float, size: int) -> tuple[float, float]:
    """Image point (x, y) to ROI coordinate (row, col)."""
    s = side / size
    return (xy[1] - center[1]) / s + size / 2.0, (xy[0] - center[0]) / s + size / 2.0
