"""Sequence container and the OTB directory layout (img/NNNN.ext + groundtruth_rect.txt)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .geometry import BBox

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp"}


class FormatError(ValueError):
    """A sequence directory or annotation file does not follow the expected layout."""


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def write_png(path, frame: np.ndarray) -> None:
    Image.fromarray(np.asarray(frame, dtype=np.uint8)).save(path, format="PNG")


@dataclass
class SequenceRecord:
    """Frames (in memory or as file paths) with one ground-truth box per frame."""

    name: str
    frames: list[Any]
    boxes: np.ndarray  # (N, 4) x, y, w, h
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4)
        if len(self.frames) != len(self.boxes):
            raise FormatError(f"{self.name}: {len(self.frames)} frames but {len(self.boxes)} boxes")
        if np.any(self.boxes[:, 2:] <= 0):
            bad = int(np.argmax(np.any(self.boxes[:, 2:] <= 0, axis=1)))
            raise FormatError(f"{self.name}: box {bad} has non-positive size {self.boxes[bad].tolist()}")

    def __len__(self) -> int:
        return len(self.frames)

    def frame(self, i: int) -> np.ndarray:
        f = self.frames[i]
        return read_image(f) if isinstance(f, (str, Path)) else f

    def bbox(self, i: int) -> BBox:
        return BBox(*self.boxes[i])


def parse_groundtruth(text: str, source: str = "groundtruth_rect.txt") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = [p for p in re.split(r"[,\t ]+", line.strip()) if p]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"{source}: line {lineno}: cannot parse {line!r}") from None
        if len(vals) != 4:
            raise FormatError(f"{source}: line {lineno}: expected 4 values, found {len(vals)}")
        rows.append(vals)
    return np.asarray(rows, dtype=np.float64).reshape(-1, 4)


def load_otb_sequence(directory) -> SequenceRecord:
    d = Path(directory)
    img_dir = d / "img"
    gt_path = d / "groundtruth_rect.txt"
    if not img_dir.is_dir():
        raise FormatError(f"{d}: missing img/ directory")
    if not gt_path.is_file():
        raise FormatError(f"{d}: missing groundtruth_rect.txt")
    frames = sorted(p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    boxes = parse_groundtruth(gt_path.read_text(), str(gt_path))
    if len(frames) != len(boxes):
        raise FormatError(f"{d}: {len(frames)} frames but {len(boxes)} ground-truth lines")
    return SequenceRecord(d.name, frames, boxes)


def load_otb_dataset(root, names=None) -> list[SequenceRecord]:
    root = Path(root)
    if names:
        dirs = [root / n for n in names]
    else:
        dirs = sorted(p for p in root.iterdir() if (p / "groundtruth_rect.txt").is_file())
    if not dirs:
        raise FormatError(f"{root}: no OTB sequences found")
    return [load_otb_sequence(p) for p in dirs]


def format_box(box) -> str:
    return ",".join(f"{float(v):.10g}" for v in box)


def write_otb_sequence(seq: SequenceRecord, directory) -> Path:
    d = Path(directory)
    (d / "img").mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        write_png(d / "img" / f"{i + 1:04d}.png", seq.frame(i))
    (d / "groundtruth_rect.txt").write_text("".join(format_box(b) + "\n" for b in seq.boxes))
    return d
