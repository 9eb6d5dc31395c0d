"""Forward kernels and their gradients.

Convolution is im2col + one GEMM. Pools reduce in float64 whatever the tensor
dtype. Cross-correlation of feature maps runs through real FFTs in float64,
since the correlated maps are far too large for im2col.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import ShapeError, Tensor, as_tensor, record, result_dtype


def _ints2(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        a, b = v
        return int(a), int(b)
    return int(v), int(v)


def _pad4(p) -> tuple[int, int, int, int]:
    """Normalize padding to (top, bottom, left, right)."""
    if isinstance(p, (tuple, list)):
        if len(p) == 4:
            return tuple(int(x) for x in p)  # type: ignore[return-value]
        if len(p) == 2:
            return int(p[0]), int(p[0]), int(p[1]), int(p[1])
    return (int(p),) * 4  # type: ignore[return-value]


def _window_out(size: int, pad_lo: int, pad_hi: int, k: int, stride: int, dilation: int) -> int:
    return (size + pad_lo + pad_hi - dilation * (k - 1) - 1) // stride + 1


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of one convolution layer."""

    kernel: tuple[int, int]
    in_channels: int
    out_channels: int
    stride: int = 1
    dilation: int = 1
    padding: tuple[int, int, int, int] = (0, 0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "kernel", _ints2(self.kernel))
        object.__setattr__(self, "padding", _pad4(self.padding))
        if min(self.kernel) < 1 or self.stride < 1 or self.dilation < 1:
            raise ValueError(f"invalid conv geometry {self}")
        if min(self.padding) < 0 or self.in_channels < 1 or self.out_channels < 1:
            raise ValueError(f"invalid conv geometry {self}")

    @classmethod
    def same(cls, k: int, in_channels: int, out_channels: int, dilation: int = 1) -> "ConvSpec":
        """Stride-1 layer whose padding keeps the spatial size (odd ``k`` only)."""
        if k % 2 == 0:
            raise ValueError(f"size-preserving padding needs an odd kernel, got {k}")
        p = dilation * (k - 1) // 2
        return cls((k, k), in_channels, out_channels, 1, dilation, (p, p, p, p))

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels, *self.kernel)

    def output_size(self, h: int, w: int) -> tuple[int, int]:
        pt, pb, pl, pr = self.padding
        kh, kw = self.kernel
        oh = _window_out(h, pt, pb, kh, self.stride, self.dilation)
        ow = _window_out(w, pl, pr, kw, self.stride, self.dilation)
        if oh < 1 or ow < 1:
            raise ShapeError(f"input {h}x{w} too small for {self}")
        return oh, ow


# ---------------------------------------------------------------- conv / pool


def _pad_hw(x: np.ndarray, pad, value=0.0) -> np.ndarray:
    pt, pb, pl, pr = pad
    if not (pt or pb or pl or pr):
        return x
    return np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)), constant_values=value)


def _windows(xp: np.ndarray, kh: int, kw: int, stride: int, dilation: int, oh: int, ow: int) -> np.ndarray:
    """Strided view (n, c, oh, ow, kh, kw) over an already padded input."""
    span_h, span_w = dilation * (kh - 1) + 1, dilation * (kw - 1) + 1
    v = sliding_window_view(xp, (span_h, span_w), axis=(2, 3))
    return v[:, :, : (oh - 1) * stride + 1 : stride, : (ow - 1) * stride + 1 : stride, ::dilation, ::dilation]


def _tap_slice(i, j, stride, dilation, oh, ow):
    r0, c0 = i * dilation, j * dilation
    return (slice(None), slice(None),
            slice(r0, r0 + (oh - 1) * stride + 1, stride), slice(c0, c0 + (ow - 1) * stride + 1, stride))


def _im2col(xp: np.ndarray, kh, kw, stride, dilation, oh, ow) -> np.ndarray:
    """Columns (n, c, kh, kw, oh, ow); each tap is one block copy of a shifted image slice."""
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[_tap_slice(i, j, stride, dilation, oh, ow)]
    return cols


def _scatter_taps(dxp: np.ndarray, taps: np.ndarray, kh, kw, stride, dilation, oh, ow) -> None:
    """Add per-tap gradients (n, c, kh, kw, oh, ow) back onto the padded input."""
    for i in range(kh):
        for j in range(kw):
            dxp[_tap_slice(i, j, stride, dilation, oh, ow)] += taps[:, :, i, j]


def _unpad(dxp: np.ndarray, pad, h: int, w: int) -> np.ndarray:
    pt, _, pl, _ = pad
    return dxp[:, :, pt : pt + h, pl : pl + w]


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None, spec: ConvSpec) -> Tensor:
    """Dilated, strided 2-D convolution (cross-correlation convention) plus bias."""
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and weight, got input {x.shape} and weight {weight.shape}")
    n, c, h, w = x.shape
    if weight.shape != spec.weight_shape:
        raise ShapeError(f"conv2d weight {weight.shape} does not match spec {spec.weight_shape}")
    if c != spec.in_channels:
        raise ShapeError(f"conv2d input {x.shape} has {c} channels but weight {weight.shape} expects {spec.in_channels}")
    if bias is not None and bias.shape != (spec.out_channels,):
        raise ShapeError(f"conv2d bias {bias.shape} does not match {spec.out_channels} output channels")
    kh, kw = spec.kernel
    s, d = spec.stride, spec.dilation
    oh, ow = spec.output_size(h, w)
    k = spec.out_channels
    dtype = result_dtype(x, weight) if bias is None else result_dtype(x, weight, bias)

    xp = _pad_hw(x.data.astype(dtype, copy=False), spec.padding)
    cols = _im2col(xp, kh, kw, s, d, oh, ow).reshape(n, c * kh * kw, oh * ow)
    wmat = weight.data.astype(dtype, copy=False).reshape(k, -1)
    out = np.matmul(wmat, cols)
    if bias is not None:
        out += bias.data.astype(dtype, copy=False)[:, None]
    res = Tensor(out.reshape(n, k, oh, ow))

    inputs = (x, weight) if bias is None else (x, weight, bias)

    def bwd(g, needs):
        g3 = np.ascontiguousarray(g, dtype=dtype).reshape(n, k, oh * ow)
        dx = dw = db = None
        if needs[1]:
            dw = np.zeros((k, c * kh * kw), dtype=dtype)
            for i in range(n):
                dw += g3[i] @ cols[i].T
            dw = dw.reshape(weight.shape)
        if len(needs) > 2 and needs[2]:
            db = g3.sum(axis=(0, 2))
        if needs[0]:
            dcols = np.matmul(wmat.T, g3).reshape(n, c, kh, kw, oh, ow)
            dxp = np.zeros(xp.shape, dtype=dtype)
            _scatter_taps(dxp, dcols, kh, kw, s, d, oh, ow)
            dx = _unpad(dxp, spec.padding, h, w)
        return (dx, dw) if bias is None else (dx, dw, db)

    return record(res, inputs, bwd)


def _pool_geometry(x: Tensor, kernel, stride, padding):
    if x.ndim != 4:
        raise ShapeError(f"pooling expects a 4-D input, got {x.shape}")
    kh, kw = _ints2(kernel)
    sh, sw = _ints2(stride)
    if kh < 1 or kw < 1 or sh < 1 or sw < 1:
        raise ValueError("pool kernel and stride must be >= 1")
    if sh != sw:
        raise ValueError("anisotropic pool strides are not supported")
    pad = _pad4(padding)
    if pad[0] >= kh or pad[1] >= kh or pad[2] >= kw or pad[3] >= kw:
        raise ValueError(f"padding {pad} would create empty windows for kernel {(kh, kw)}")
    _, _, h, w = x.shape
    oh = _window_out(h, pad[0], pad[1], kh, sh, 1)
    ow = _window_out(w, pad[2], pad[3], kw, sw, 1)
    if oh < 1 or ow < 1:
        raise ShapeError(f"input {x.shape} too small for pool kernel {(kh, kw)}")
    return kh, kw, sh, pad, oh, ow


def _inbounds_count(size: int, pad_lo: int, k: int, stride: int, out: int) -> np.ndarray:
    start = np.arange(out) * stride - pad_lo
    return (np.minimum(start + k, size) - np.maximum(start, 0)).astype(np.float64)


def avg_pool2d(x: Tensor, kernel, stride, padding=0) -> Tensor:
    """Window mean over in-bounds cells only; padding never enters the denominator."""
    kh, kw, s, pad, oh, ow = _pool_geometry(x, kernel, stride, padding)
    n, c, h, w = x.shape
    xp = _pad_hw(x.data, pad)
    win = _windows(xp, kh, kw, s, 1, oh, ow)
    counts = np.outer(_inbounds_count(h, pad[0], kh, s, oh), _inbounds_count(w, pad[2], kw, s, ow))
    out = (win.sum(axis=(4, 5), dtype=np.float64) / counts).astype(x.dtype)

    def bwd(g, needs):
        gs = (g / counts).astype(x.dtype)
        dxp = np.zeros(xp.shape, dtype=x.dtype)
        taps = np.broadcast_to(gs[:, :, None, None], (n, c, kh, kw, oh, ow))
        _scatter_taps(dxp, taps, kh, kw, s, 1, oh, ow)
        return (_unpad(dxp, pad, h, w),)

    return record(Tensor(out), (x,), bwd)


def max_pool2d(x: Tensor, kernel, stride, padding=0) -> Tensor:
    """Window max; padding cells never win. Ties route the gradient to the first tap."""
    kh, kw, s, pad, oh, ow = _pool_geometry(x, kernel, stride, padding)
    n, c, h, w = x.shape
    xp = _pad_hw(x.data, pad, value=-np.inf)
    win = _windows(xp, kh, kw, s, 1, oh, ow).reshape(n, c, oh, ow, kh * kw)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0].copy()

    def bwd(g, needs):
        taps = np.zeros((n, c, oh, ow, kh * kw), dtype=x.dtype)
        np.put_along_axis(taps, idx[..., None], g[..., None], axis=-1)
        dxp = np.zeros(xp.shape, dtype=x.dtype)
        _scatter_taps(dxp, taps.reshape(n, c, oh, ow, kh, kw).transpose(0, 1, 4, 5, 2, 3), kh, kw, s, 1, oh, ow)
        return (_unpad(dxp, pad, h, w),)

    return record(Tensor(out), (x,), bwd)


# ---------------------------------------------------------------- elementwise


def relu(t: Tensor) -> Tensor:
    mask = t.data > 0
    return record(Tensor(np.where(mask, t.data, 0).astype(t.dtype)), (t,), lambda g, _: (g * mask,))


def sigmoid(t: Tensor) -> Tensor:
    # branch-free stable form; exp of a non-positive argument never overflows
    z = np.exp(-np.abs(t.data))
    y = np.where(t.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(t.dtype)
    # saturated values would round onto the closed interval
    fi = np.finfo(t.dtype)
    y = np.clip(y, fi.tiny, np.nextafter(t.dtype.type(1), t.dtype.type(0)))
    return record(Tensor(y), (t,), lambda g, _: (g * y * (1 - y),))


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: operand shapes differ, {a.shape} vs {b.shape}")


def subtract(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "subtract")
    return record(Tensor(a.data - b.data), (a, b), lambda g, _: (g, -g))


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return record(Tensor(a.data + b.data), (a, b), lambda g, _: (g, g))


def multiply(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "multiply")
    return record(Tensor(a.data * b.data), (a, b), lambda g, _: (g * b.data, g * a.data))


def scale(t: Tensor, factor: float) -> Tensor:
    f = float(factor)
    return record(Tensor(t.data * t.dtype.type(f)), (t,), lambda g, _: (g * f,))


def square(t: Tensor) -> Tensor:
    return record(Tensor(t.data * t.data), (t,), lambda g, _: (2 * g * t.data,))


def sum_all(t: Tensor) -> Tensor:
    out = np.asarray(t.data.sum(dtype=np.float64), dtype=t.dtype)
    return record(Tensor(out), (t,), lambda g, _: (np.broadcast_to(g, t.shape),))


def mean(t: Tensor) -> Tensor:
    size = t.data.size
    out = np.asarray(t.data.sum(dtype=np.float64) / size, dtype=t.dtype)
    return record(Tensor(out), (t,), lambda g, _: (np.broadcast_to(g / size, t.shape),))


def concat_depth(ts: Sequence[Tensor]) -> Tensor:
    """Stack along the channel axis; all inputs share (n, h, w)."""
    ts = [as_tensor(t) for t in ts]
    if not ts:
        raise ShapeError("concat_depth needs at least one tensor")
    ref = ts[0].shape
    for t in ts[1:]:
        if t.ndim != 4 or t.shape[0] != ref[0] or t.shape[2:] != ref[2:]:
            raise ShapeError(f"concat_depth: {t.shape} is incompatible with {ref} (n, h, w must match)")
    out = np.concatenate([t.data for t in ts], axis=1)
    bounds = np.cumsum([0] + [t.shape[1] for t in ts])

    def bwd(g, needs):
        return tuple(g[:, bounds[i] : bounds[i + 1]] for i in range(len(ts)))

    return record(Tensor(out), ts, bwd)


# ---------------------------------------------------------------- resampling


def resize_matrix(n_in: int, n_out: int) -> np.ndarray:
    """1-D linear interpolation weights (n_out, n_in), half-pixel centers, edge clamped."""
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), 1.0 - frac)
    np.add.at(m, (rows, i1), frac)
    return m


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    if out_h < 1 or out_w < 1:
        raise ValueError(f"resize target must be >= 1, got {out_h}x{out_w}")
    if x.ndim != 4:
        raise ShapeError(f"bilinear_resize expects a 4-D input, got {x.shape}")
    _, _, h, w = x.shape
    if (h, w) == (out_h, out_w):
        return record(Tensor(x.data.copy()), (x,), lambda g, _: (g,))
    ry = resize_matrix(h, out_h).astype(x.dtype)
    rx = resize_matrix(w, out_w).astype(x.dtype)
    out = np.einsum("yh,nchw,xw->ncyx", ry, x.data, rx, optimize=True)

    def bwd(g, needs):
        return (np.einsum("yh,ncyx,xw->nchw", ry, g, rx, optimize=True),)

    return record(Tensor(out), (x,), bwd)


# ---------------------------------------------------------------- correlation


def xcorr(roi_feat: Tensor, tmpl_feat: Tensor) -> Tensor:
    """Valid cross-correlation of template features over ROI features, summed over channels.

    ``roi_feat`` is (n, c, Hz, Wz) and ``tmpl_feat`` (n, c, Hx, Wx); sample ``i`` of the
    template is matched against sample ``i`` of the ROI. Output (n, 1, Hz-Hx+1, Wz-Wx+1).
    """
    if roi_feat.ndim != 4 or tmpl_feat.ndim != 4:
        raise ShapeError(f"xcorr expects 4-D features, got roi {roi_feat.shape} and template {tmpl_feat.shape}")
    n, c, hz, wz = roi_feat.shape
    n2, c2, hx, wx = tmpl_feat.shape
    if n != n2 or c != c2:
        raise ShapeError(f"xcorr: roi {roi_feat.shape} and template {tmpl_feat.shape} disagree on batch/channels")
    if hx > hz or wx > wz:
        raise ShapeError(f"xcorr: template {tmpl_feat.shape} is larger than roi {roi_feat.shape}")
    oh, ow = hz - hx + 1, wz - wx + 1
    dtype = result_dtype(roi_feat, tmpl_feat)
    shape = (hz, wz)
    fz = np.fft.rfft2(roi_feat.data.astype(np.float64), s=shape)
    fx = np.fft.rfft2(tmpl_feat.data.astype(np.float64), s=shape)
    # correlation theorem; indices < (oh, ow) never wrap
    full = np.fft.irfft2((fz * np.conj(fx)).sum(axis=1), s=shape)
    out = full[:, None, :oh, :ow].astype(dtype)

    def bwd(g, needs):
        fg = np.fft.rfft2(g[:, 0].astype(np.float64), s=shape)[:, None]
        d_roi = d_tmpl = None
        if needs[0]:
            # full convolution of the output gradient with the template fits exactly in (Hz, Wz)
            d_roi = np.fft.irfft2(fg * fx, s=shape).astype(dtype)
        if needs[1]:
            d_tmpl = np.fft.irfft2(fz * np.conj(fg), s=shape)[:, :, :hx, :wx].astype(dtype)
        return d_roi, d_tmpl

    return record(Tensor(out), (roi_feat, tmpl_feat), bwd)
