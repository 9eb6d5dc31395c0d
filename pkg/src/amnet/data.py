"""Synthetic moving-target sequences and training triplets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import crop_resize, image_to_roi
from .head import gaussian_gt, gt_sigma
from .sequences import SequenceRecord
from .tensor import resize_matrix


@dataclass
class SynthConfig:
    width: int = 160
    height: int = 120
    target_size: int = 16
    n_frames: int = 100
    # speed range in px/frame, used when ``velocity`` is not given
    speed: list[float] = field(default_factory=lambda: [1.0, 3.0])
    velocity: list[float] | None = None
    start: list[float] | None = None
    motion_noise: float = 0.5
    camera_jitter: int = 0
    occlusions: int = 0
    occlusion_length: int = 5
    n_sequences: int = 8

    def validate(self) -> None:
        if self.width < 64 or self.height < 64:
            raise ValueError(f"synth frame must be at least 64x64, got {self.width}x{self.height}")
        if self.target_size < 8:
            raise ValueError(f"synth.target_size must be >= 8, got {self.target_size}")
        if self.target_size + 2 * self.camera_jitter > min(self.width, self.height):
            raise ValueError(f"target of {self.target_size} px (jitter {self.camera_jitter}) "
                             f"does not fit a {self.width}x{self.height} frame")
        if self.n_frames < 1 or self.n_sequences < 1:
            raise ValueError("synth.n_frames and synth.n_sequences must be >= 1")
        if self.occlusions and not 1 <= self.occlusion_length < self.n_frames:
            raise ValueError("synth.occlusion_length must be in [1, n_frames)")


def value_noise(rng: np.random.Generator, h: int, w: int, cells=(32, 16, 8, 4), gains=(0.45, 0.3, 0.15, 0.1)) -> np.ndarray:
    """Sum of bilinearly upsampled random lattices, (h, w, 3) in [0, 1]."""
    out = np.zeros((h, w, 3))
    for cell, gain in zip(cells, gains):
        gh, gw = h // cell + 2, w // cell + 2
        lattice = rng.random((gh, gw, 3))
        ry = resize_matrix(gh, gh * cell)[:h]
        rx = resize_matrix(gw, gw * cell)[:w]
        rows = np.tensordot(ry, lattice, axes=(1, 0))  # (h, gw, 3)
        out += gain * np.tensordot(rows, rx, axes=(1, 1)).transpose(0, 2, 1)
    return out / sum(gains)


def target_texture(rng: np.random.Generator, size: int, cell: int = 4) -> np.ndarray:
    """Blocky saturated pattern, visually distinct from the smooth background."""
    n = -(-size // cell)
    blocks = rng.choice([0.0, 0.15, 0.85, 1.0], size=(n, n, 3))
    tex = np.kron(blocks, np.ones((cell, cell, 1)))[:size, :size]
    return tex


def _reflect(p: float, v: float, lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        return lo, 0.0
    while p < lo or p > hi:
        if p < lo:
            p, v = 2 * lo - p, -v
        if p > hi:
            p, v = 2 * hi - p, -v
    return p, v


def synth_sequence(cfg: SynthConfig, seed: int) -> SequenceRecord:
    """Textured square moving over value noise, with optional camera jitter and occlusions.

    The target bounces off the frame border so it stays fully visible. Camera jitter
    shifts the whole scene by an integer offset per frame; ``meta['camera']`` logs
    the (dx, dy) such that frame pixel (y, x) shows world pixel (y + dy, x + dx).
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    J, S, W, H = cfg.camera_jitter, cfg.target_size, cfg.width, cfg.height
    world = value_noise(rng, H + 2 * J, W + 2 * J)
    world = 0.15 + 0.7 * world
    texture = target_texture(rng, S)

    lo_x, hi_x = float(J), float(W - S - J)
    lo_y, hi_y = float(J), float(H - S - J)
    if cfg.start is not None:
        px, py = float(cfg.start[0]), float(cfg.start[1])
    else:
        px, py = rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)
    if cfg.velocity is not None:
        vx, vy = float(cfg.velocity[0]), float(cfg.velocity[1])
    else:
        ang = rng.uniform(0, 2 * np.pi)
        sp = rng.uniform(cfg.speed[0], cfg.speed[1])
        vx, vy = sp * np.cos(ang), sp * np.sin(ang)

    hidden = np.zeros(cfg.n_frames, dtype=bool)
    for _ in range(cfg.occlusions):
        s0 = int(rng.integers(1, cfg.n_frames - cfg.occlusion_length + 1))
        hidden[s0 : s0 + cfg.occlusion_length] = True

    frames, boxes, offsets = [], [], []
    for t in range(cfg.n_frames):
        if t > 0:
            px, vx = _reflect(px + vx, vx, lo_x, hi_x)
            py, vy = _reflect(py + vy, vy, lo_y, hi_y)
        jx = px + (rng.normal(0, cfg.motion_noise) if cfg.motion_noise > 0 else 0.0)
        jy = py + (rng.normal(0, cfg.motion_noise) if cfg.motion_noise > 0 else 0.0)
        wx = int(round(min(max(jx, lo_x), hi_x)))
        wy = int(round(min(max(jy, lo_y), hi_y)))
        dx, dy = (int(rng.integers(-J, J + 1)), int(rng.integers(-J, J + 1))) if J > 0 else (0, 0)
        scene = world.copy()
        if not hidden[t]:
            scene[wy + J : wy + J + S, wx + J : wx + J + S] = texture
        frame = scene[J + dy : J + dy + H, J + dx : J + dx + W]
        frames.append(np.round(frame * 255).astype(np.uint8))
        boxes.append((wx - dx, wy - dy, S, S))
        offsets.append((dx, dy))
    meta = {"camera": offsets, "occluded": hidden.tolist(), "seed": seed}
    return SequenceRecord(f"synth_{seed:05d}", frames, np.asarray(boxes, float), meta)


def synth_corpus(cfg: SynthConfig, seed: int, n_sequences: int | None = None) -> list[SequenceRecord]:
    n = cfg.n_sequences if n_sequences is None else n_sequences
    return [synth_sequence(cfg, seed * 1000 + i) for i in range(n)]


@dataclass
class Triplet:
    roi_t: np.ndarray  # (3, R, R) in [0, 1]
    roi_prev: np.ndarray
    template: np.ndarray  # (3, T, T)
    peak: tuple[float, float]  # (row, col) in ROI pixels
    box_wh: tuple[float, float]  # target size in ROI pixels


def _chw(patch: np.ndarray) -> np.ndarray:
    return (patch / 255.0).transpose(2, 0, 1).astype(np.float32)


def sample_triplet(seq: SequenceRecord, t: int, rng: np.random.Generator, template_size: int = 64,
                   roi_size: int = 192, max_shift: float = 16.0, shift=None) -> Triplet:
    """Patches around the ground truth at ``t - 1``; the target at ``t`` gives the peak.

    The shared ROI center is displaced by up to ``max_shift`` ROI pixels per axis
    (or exactly ``shift = (dx, dy)`` when given) so peaks are not always centered.
    """
    if not 1 <= t < len(seq):
        raise IndexError(f"triplet index {t} outside [1, {len(seq)})")
    prev = seq.bbox(t - 1)
    cur = seq.bbox(t)
    side = max(prev.w, prev.h)
    roi_side = 3.0 * side
    s = roi_side / roi_size
    if shift is None:
        shift = rng.uniform(-max_shift, max_shift, size=2) if max_shift > 0 else (0.0, 0.0)
    cx, cy = prev.center
    center = (cx + shift[0] * s, cy + shift[1] * s)
    f_prev, f_cur = seq.frame(t - 1), seq.frame(t)
    roi_t = crop_resize(f_cur, center, roi_side, roi_size)
    roi_prev = crop_resize(f_prev, center, roi_side, roi_size)
    template = crop_resize(f_prev, prev.center, side, template_size)
    r, c = image_to_roi(cur.center, center, roi_side, roi_size)
    peak = (min(max(r, 0.0), roi_size - 1.0), min(max(c, 0.0), roi_size - 1.0))
    return Triplet(_chw(roi_t), _chw(roi_prev), _chw(template), peak, (cur.w / s, cur.h / s))


def stack_batch(triplets: list[Triplet], sigma_factor: float = 0.1):
    """Arrays (roi_t, roi_prev, template, gt) with a leading batch axis."""
    roi_size = triplets[0].roi_t.shape[-1]
    gts = [gaussian_gt(tr.peak, gt_sigma(*tr.box_wh, sigma_factor), roi_size)[None] for tr in triplets]
    return (np.stack([tr.roi_t for tr in triplets]), np.stack([tr.roi_prev for tr in triplets]),
            np.stack([tr.template for tr in triplets]), np.stack(gts))
