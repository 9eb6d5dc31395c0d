"""Frame-by-frame tracking loop: crop, one forward pass, argmax, update."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import BBox, crop_resize, roi_to_image, to_tensor
from .tensor import Tensor


@dataclass
class TrackState:
    bbox: BBox
    template_patch: Tensor
    prev_roi_patch: Tensor
    roi_center: tuple[float, float]
    roi_side: float


@dataclass
class TrackResult:
    boxes: list[BBox]
    fps: float
    forward_calls: int


class Tracker:
    """Wraps a trained network (anything with ``config`` and ``__call__(roi_t, roi_prev, template)``)."""

    def __init__(self, model):
        self.model = model
        self.template_size = model.config.template_size
        self.roi_size = model.config.roi_size

    def _patches(self, frame, center, bbox: BBox):
        side = max(bbox.w, bbox.h)
        dtype = self.model.dtype
        tmpl = to_tensor(crop_resize(frame, center, side, self.template_size), dtype=dtype)
        roi = to_tensor(crop_resize(frame, center, 3.0 * side, self.roi_size), dtype=dtype)
        return tmpl, roi, 3.0 * side

    def init(self, frame, bbox: BBox) -> TrackState:
        if not isinstance(bbox, BBox):
            bbox = BBox(*bbox)
        center = bbox.center
        tmpl, roi, side = self._patches(frame, center, bbox)
        return TrackState(bbox, tmpl, roi, center, side)

    def response(self, state: TrackState, frame) -> np.ndarray:
        z_t = to_tensor(crop_resize(frame, state.roi_center, state.roi_side, self.roi_size), dtype=self.model.dtype)
        return self.model(z_t, state.prev_roi_patch, state.template_patch).data[0, 0]

    def locate(self, state: TrackState, response: np.ndarray) -> tuple[float, float]:
        """Image center of the response argmax; ties go to the smallest row, then column."""
        r, c = np.unravel_index(int(np.argmax(response)), response.shape)
        return roi_to_image((r, c), state.roi_center, state.roi_side, self.roi_size)

    def step(self, state: TrackState, frame) -> tuple[TrackState, BBox]:
        cx, cy = self.locate(state, self.response(state, frame))
        bbox = state.bbox.recentered(cx, cy)
        # progressive update: template and previous ROI are replaced, never blended
        tmpl, roi, side = self._patches(frame, (cx, cy), bbox)
        return TrackState(bbox, tmpl, roi, (cx, cy), side), bbox


def track_sequence(model, frames: Sequence, bbox0) -> TrackResult:
    """Track from ``bbox0`` on frame 0; frame 0's output is ``bbox0`` itself.

    ``frames`` may be any sequence of (H, W, 3) arrays, or an object with
    ``__len__`` and ``frame(i)``. FPS counts frames 1..N-1 only.
    """
    n = len(frames)
    if n < 1:
        raise ValueError("track_sequence needs at least one frame")
    get = frames.frame if hasattr(frames, "frame") else frames.__getitem__
    bbox0 = bbox0 if isinstance(bbox0, BBox) else BBox(*bbox0)
    tracker = Tracker(model)
    calls0 = getattr(model, "forward_calls", 0)
    state = tracker.init(get(0), bbox0)
    boxes = [bbox0]
    elapsed = 0.0
    for i in range(1, n):
        frame = get(i)
        t0 = time.perf_counter()
        state, box = tracker.step(state, frame)
        elapsed += time.perf_counter() - t0
        boxes.append(box)
    fps = (n - 1) / elapsed if elapsed > 0 else float("nan")
    return TrackResult(boxes, fps, getattr(model, "forward_calls", 0) - calls0)
