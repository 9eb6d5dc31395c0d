"""The full two-stream network and its configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .anet import ANet
from .head import FusionHead
from .mnet import MNet
from .tensor import ParamStore, ShapeError, Tensor


@dataclass
class ModelConfig:
    template_size: int = 64
    roi_size: int = 192
    spotlight_kernels: list[int] = field(default_factory=lambda: [3, 5, 7])
    contrast_kernels: list[int] = field(default_factory=lambda: [7, 5, 3])
    pool_kernels: list[int] = field(default_factory=lambda: [3, 5, 7])
    gt_sigma_factor: float = 0.1
    luminance: bool = False
    # False trains/evaluates the appearance stream alone (motion input fixed at zero)
    use_motion: bool = True

    def validate(self) -> None:
        if self.roi_size != 3 * self.template_size:
            raise ValueError(f"model.roi_size must be 3 x template_size, got {self.roi_size} vs {self.template_size}")
        for key in ("spotlight_kernels", "contrast_kernels", "pool_kernels"):
            ks = getattr(self, key)
            if not ks or any((not isinstance(k, int)) or k < 1 or k % 2 == 0 for k in ks):
                raise ValueError(f"model.{key} must be a non-empty list of odd positive integers, got {ks}")
        if not self.gt_sigma_factor > 0:
            raise ValueError("model.gt_sigma_factor must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class Maps(NamedTuple):
    o_a: Tensor
    o_m: Tensor
    o_am: Tensor


class AMNet:
    """Appearance + motion streams fused into one response map.

    All parameters live in ``self.params``; Xavier weights, zero biases, drawn from a
    single generator in construction order so a seed fixes the whole network.
    """

    def __init__(self, config: ModelConfig | None = None, seed: int = 0, dtype=np.float32,
                 check_sizes: bool = True):
        self.config = config or ModelConfig()
        cfg = self.config
        rng = np.random.default_rng(seed)
        self.params = ParamStore()
        self.anet = ANet(self.params, rng, dtype=dtype)
        self.mnet = MNet(self.params, rng, cfg.contrast_kernels, cfg.spotlight_kernels, cfg.pool_kernels,
                         cfg.luminance, dtype=dtype)
        self.head = FusionHead(self.params, rng, dtype=dtype)
        self.forward_calls = 0
        if check_sizes:
            self.anet.check_geometry(cfg.template_size, cfg.roi_size)
            self.mnet.check_geometry(cfg.roi_size)

    @property
    def dtype(self):
        return self.anet.fuse.weight.dtype

    def astype(self, dtype) -> "AMNet":
        self.params.astype(dtype)
        return self

    def motion_map(self, roi_t: Tensor, roi_prev: Tensor) -> Tensor:
        if not self.config.use_motion:
            n, _, h, w = roi_t.shape
            return Tensor(np.zeros((n, 1, h, w), dtype=roi_t.dtype))
        return self.mnet(roi_t, roi_prev)

    def forward_maps(self, roi_t: Tensor, roi_prev: Tensor, template: Tensor) -> Maps:
        if roi_t.shape != roi_prev.shape:
            raise ShapeError(f"ROI patches differ in shape: {roi_t.shape} vs {roi_prev.shape}")
        self.forward_calls += 1
        o_a = self.anet(roi_t, template)
        o_m = self.motion_map(roi_t, roi_prev)
        return Maps(o_a, o_m, self.head(o_a, o_m))

    def forward(self, roi_t: Tensor, roi_prev: Tensor, template: Tensor) -> Tensor:
        return self.forward_maps(roi_t, roi_prev, template).o_am

    __call__ = forward

    def without_motion(self) -> "AMNet":
        """Copy whose fusion conv ignores the motion channel (appearance-only ablation)."""
        clone = AMNet(self.config, dtype=self.dtype, check_sizes=False)
        clone.params.load_state_dict(self.params.state_dict())
        clone.head.conv.weight.data[0, 1] = 0
        clone.config = ModelConfig(**{**self.config.to_dict(), "use_motion": False})
        return clone
