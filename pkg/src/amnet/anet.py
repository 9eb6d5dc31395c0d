"""Appearance stream: Siamese atrous embedding, lateral levels and multi-level matching."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .layers import Conv2d
from .tensor import ConvSpec, ParamStore, ShapeError, Tensor, concat_depth, relu, scale, xcorr

# name, kernel, in, out, atrous rate
LAYERS = (
    ("conv1", 5, 3, 6, 1),
    ("conv2", 3, 6, 12, 2),
    ("conv3", 3, 12, 24, 3),
    ("conv4", 5, 24, 36, 1),
    ("conv5", 3, 36, 48, 2),
    ("conv6", 3, 48, 64, 3),
)
# lateral pairs (0-based layer indices) forming the three matching levels
LATERAL = ((0, 3), (1, 4), (2, 5))
LEVEL_CHANNELS = tuple(LAYERS[a][3] + LAYERS[b][3] for a, b in LATERAL)  # (42, 60, 88)


class FeaturePyramid(NamedTuple):
    level1: Tensor
    level2: Tensor
    level3: Tensor


class ANet:
    """Six size-preserving conv layers (ReLU after each), no pooling, no stride.

    Both the template and the ROI go through the very same layer objects, so the
    branches share parameter storage by construction. Level score maps are
    normalized by the template feature volume before the 1x1 level fusion; without
    it the raw correlation sums (tens of thousands of products) saturate the
    output sigmoid at initialization.
    """

    def __init__(self, store: ParamStore, rng: np.random.Generator, prefix: str = "anet", dtype=np.float32):
        self.layers = [Conv2d(store, f"{prefix}.{name}", ConvSpec.same(k, cin, cout, rate), rng, dtype)
                       for name, k, cin, cout, rate in LAYERS]
        self.fuse = Conv2d(store, f"{prefix}.fuse", ConvSpec((1, 1), len(LATERAL), 1), rng, dtype)

    def check_geometry(self, *sizes: int) -> None:
        for s in sizes:
            for layer in self.layers:
                layer.check_preserves(s, s)

    def embed(self, patch: Tensor) -> FeaturePyramid:
        if patch.ndim != 4 or patch.shape[1] != 3:
            raise ShapeError(f"embed expects (n, 3, H, W) patches, got {patch.shape}")
        outs = []
        x = patch
        for layer in self.layers:
            x = relu(layer(x))
            outs.append(x)
        return FeaturePyramid(*(concat_depth([outs[a], outs[b]]) for a, b in LATERAL))

    def score_maps(self, roi_feats: FeaturePyramid, tmpl_feats: FeaturePyramid) -> Tensor:
        maps = []
        for z, x in zip(roi_feats, tmpl_feats):
            _, c, hx, wx = x.shape
            maps.append(scale(xcorr(z, x), 1.0 / (c * hx * wx)))
        return concat_depth(maps)

    def forward(self, roi: Tensor, tmpl: Tensor) -> Tensor:
        """O_A: (n, 1, R-T+1, R-T+1) appearance response for ROI size R, template size T."""
        return self.fuse(self.score_maps(self.embed(roi), self.embed(tmpl)))

    __call__ = forward
