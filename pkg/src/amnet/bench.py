"""One-pass evaluation: IoU / center error, precision and success curves, AUC."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import BBox
from .sequences import SequenceRecord
from .tracker import track_sequence

PRECISION_THRESHOLDS = np.arange(51, dtype=np.float64)  # 0..50 px
SUCCESS_THRESHOLDS = np.linspace(0.0, 1.0, 51)  # step 0.02


def _xywh(b) -> tuple[float, float, float, float]:
    return b.as_tuple() if isinstance(b, BBox) else tuple(float(v) for v in b)  # type: ignore[return-value]


def iou(a, b) -> float:
    ax, ay, aw, ah = _xywh(a)
    bx, by, bw, bh = _xywh(b)
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    # (x + w) - x can differ from w in the last bit, which would push identical boxes above 1
    return min(1.0, inter / union) if union > 0 else 0.0


def center_error(a, b) -> float:
    ax, ay, aw, ah = _xywh(a)
    bx, by, bw, bh = _xywh(b)
    return math.hypot((ax + aw / 2) - (bx + bw / 2), (ay + ah / 2) - (by + bh / 2))


def precision_curve(errors) -> np.ndarray:
    e = np.asarray(errors, dtype=np.float64)
    return (e[None, :] <= PRECISION_THRESHOLDS[:, None]).mean(axis=1) if e.size else np.zeros(51)


def success_curve(ious) -> np.ndarray:
    o = np.asarray(ious, dtype=np.float64)
    return (o[None, :] > SUCCESS_THRESHOLDS[:, None]).mean(axis=1) if o.size else np.zeros(51)


@dataclass
class EvalReport:
    name: str
    center_errors: np.ndarray
    ious: np.ndarray
    fps: float = float("nan")
    per_sequence: list["EvalReport"] = field(default_factory=list)

    def __post_init__(self):
        self.center_errors = np.asarray(self.center_errors, dtype=np.float64)
        self.ious = np.asarray(self.ious, dtype=np.float64)

    @property
    def precision(self) -> np.ndarray:
        return precision_curve(self.center_errors)

    @property
    def success(self) -> np.ndarray:
        return success_curve(self.ious)

    @property
    def precision_at_20(self) -> float:
        return float(self.precision[20])

    @property
    def success_auc(self) -> float:
        return float(self.success.mean())

    @property
    def mean_iou(self) -> float:
        return float(self.ious.mean()) if self.ious.size else float("nan")

    def summary(self) -> dict:
        return {"precision_at_20": self.precision_at_20, "success_auc": self.success_auc, "fps": self.fps}


def evaluate_boxes(name: str, predicted: Sequence, truth: np.ndarray, fps: float = float("nan")) -> EvalReport:
    if len(predicted) != len(truth):
        raise ValueError(f"{name}: {len(predicted)} predictions for {len(truth)} frames")
    errs = [center_error(p, g) for p, g in zip(predicted, truth)]
    ious = [iou(p, g) for p, g in zip(predicted, truth)]
    return EvalReport(name, errs, ious, fps)


class ModelTracker:
    """Runs the network tracker from the first ground-truth box."""

    def __init__(self, model):
        self.model = model

    def __call__(self, seq: SequenceRecord):
        res = track_sequence(self.model, seq, seq.boxes[0])
        return res.boxes, res.fps


class GtEchoTracker:
    """Reports the ground truth; the metrics' upper bound."""

    def __call__(self, seq: SequenceRecord):
        return [BBox(*b) for b in seq.boxes], float("nan")


def ope_evaluate(tracker, sequences: Sequence[SequenceRecord], name: str = "tracker") -> EvalReport:
    """One pass per sequence from the frame-0 ground truth; frames are pooled across sequences."""
    if not sequences:
        raise ValueError("ope_evaluate needs at least one sequence")
    per_seq = []
    frames = 0
    weighted_time = 0.0
    for seq in sequences:
        boxes, fps = tracker(seq)
        per_seq.append(evaluate_boxes(seq.name, boxes, seq.boxes, fps))
        if fps and math.isfinite(fps) and len(seq) > 1:
            frames += len(seq) - 1
            weighted_time += (len(seq) - 1) / fps
    agg_fps = frames / weighted_time if weighted_time > 0 else float("nan")
    return EvalReport(name, np.concatenate([r.center_errors for r in per_seq]),
                      np.concatenate([r.ious for r in per_seq]), agg_fps, per_seq)


# ---------------------------------------------------------------- serialization


def write_report(report: EvalReport, directory) -> Path:
    """curves.csv (curve, threshold, value), sequences.csv, summary.json."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "threshold", "value"])
        for t, v in zip(PRECISION_THRESHOLDS, report.precision):
            w.writerow(["precision", repr(float(t)), repr(float(v))])
        for t, v in zip(SUCCESS_THRESHOLDS, report.success):
            w.writerow(["success", repr(float(t)), repr(float(v))])
    with open(d / "sequences.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sequence", "frames", "precision_at_20", "success_auc", "mean_iou", "fps"])
        for r in report.per_sequence:
            w.writerow([r.name, len(r.ious), repr(r.precision_at_20), repr(r.success_auc), repr(r.mean_iou), repr(r.fps)])
    summary = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in report.summary().items()}
    (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return d


def read_curves(path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    rows: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(r["curve"], []).append((float(r["threshold"]), float(r["value"])))
    return {k: (np.array([a for a, _ in v]), np.array([b for _, b in v])) for k, v in rows.items()}
