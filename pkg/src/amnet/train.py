"""End-to-end training on triplets with Adam, weight decay and a stepped learning rate."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import sample_triplet, stack_batch
from .head import ridge_loss
from .model import AMNet, ModelConfig
from .sequences import SequenceRecord
from .tensor import Tape, Tensor, adam_step, backward, scale

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class TrainConfig:
    batch_size: int = 16
    lr_start: float = 1e-3
    lr_end: float = 1e-5
    lr_step: int = 2000
    weight_decay: float = 0.005
    # False: L2 term on the gradient (default); True: AdamW-style decay on the weights
    decoupled_decay: bool = False
    betas: list[float] = field(default_factory=lambda: [0.9, 0.999])
    eps: float = 1e-8
    steps: int = 200
    seed: int = 7
    # max ROI-pixel displacement of the crop center when sampling triplets
    max_shift: float = 16.0
    # samples per forward/backward chunk; 0 = whole batch at once
    micro_batch: int = 0

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError("train.batch_size must be >= 1")
        if not 0 < self.lr_end <= self.lr_start:
            raise ValueError("train.lr_end must be positive and <= lr_start")
        if self.lr_step < 1 or self.steps < 0:
            raise ValueError("train.lr_step must be >= 1 and train.steps >= 0")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ValueError("train.betas must be two values in [0, 1)")
        if self.micro_batch < 0:
            raise ValueError("train.micro_batch must be >= 0")


def lr_at(cfg: TrainConfig, step: int) -> float:
    """max(lr_end, lr_start * 0.1 ** floor(step / lr_step)) for 0-based ``step``."""
    return max(cfg.lr_end, cfg.lr_start * 0.1 ** (step // cfg.lr_step))


@dataclass
class HistoryRow:
    step: int
    lr: float
    loss: float


def batch_loss_and_grads(model: AMNet, arrays, micro_batch: int = 0) -> float:
    """Accumulate d(mean loss)/d(params) into ``.grad``; chunks are summed in sample order."""
    roi_t, roi_prev, tmpl, gt = arrays
    n = roi_t.shape[0]
    chunk = n if micro_batch <= 0 else micro_batch
    dtype = model.dtype
    total = 0.0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        with Tape():
            out = model(Tensor(roi_t[lo:hi].astype(dtype)), Tensor(roi_prev[lo:hi].astype(dtype)),
                        Tensor(tmpl[lo:hi].astype(dtype)))
            loss = ridge_loss(out, Tensor(gt[lo:hi].astype(dtype)))
            if hi - lo != n:
                loss = scale(loss, (hi - lo) / n)
        backward(loss)
        total += float(loss.data)
    return total


def sample_batch(corpus: Sequence[SequenceRecord], rng: np.random.Generator, n: int, model_cfg: ModelConfig,
                 max_shift: float):
    triplets = []
    for _ in range(n):
        seq = corpus[int(rng.integers(len(corpus)))]
        t = int(rng.integers(1, len(seq)))
        triplets.append(sample_triplet(seq, t, rng, model_cfg.template_size, model_cfg.roi_size, max_shift))
    return stack_batch(triplets, model_cfg.gt_sigma_factor)


def train(cfg: TrainConfig, corpus: Sequence[SequenceRecord], model_cfg: ModelConfig | None = None,
          model: AMNet | None = None, callback: Callable[[HistoryRow], None] | None = None):
    """Train from Xavier initialization (or continue ``model``); returns (model, history)."""
    cfg.validate()
    if not corpus or not any(len(s) >= 2 for s in corpus):
        raise ValueError("training corpus needs at least one sequence with two or more frames")
    corpus = [s for s in corpus if len(s) >= 2]
    model_cfg = model_cfg or (model.config if model is not None else ModelConfig())
    model = model or AMNet(model_cfg, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    history: list[HistoryRow] = []
    for step in range(cfg.steps):
        lr = lr_at(cfg, step)
        arrays = sample_batch(corpus, rng, cfg.batch_size, model.config, cfg.max_shift)
        model.params.zero_grad()
        loss = batch_loss_and_grads(model, arrays, cfg.micro_batch)
        if not math.isfinite(loss):
            raise NumericError(f"non-finite loss {loss} at step {step}")
        adam_step(model.params, lr, cfg.betas[0], cfg.betas[1], cfg.eps, cfg.weight_decay, cfg.decoupled_decay)
        row = HistoryRow(step, lr, loss)
        history.append(row)
        if callback is not None:
            callback(row)
        if step % 50 == 0:
            log.info("step %d lr %.2e loss %.6f", step, lr, loss)
    return model, history


def write_history(history: Sequence[HistoryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "lr", "loss"])
        for row in history:
            w.writerow([row.step, repr(row.lr), repr(row.loss)])


def read_history(path) -> list[HistoryRow]:
    with open(path, newline="") as fh:
        return [HistoryRow(int(r["step"]), float(r["lr"]), float(r["loss"])) for r in csv.DictReader(fh)]


def save_model(model: AMNet, path) -> None:
    """Checkpoint plus a JSON sidecar with the model config (sizes are not in the weights)."""
    save_checkpoint(model.params, path)
    Path(str(path) + ".json").write_text(json.dumps(model.config.to_dict(), indent=2, sort_keys=True) + "\n")


def load_model(path, model_cfg: ModelConfig | None = None) -> AMNet:
    sidecar = Path(str(path) + ".json")
    if model_cfg is None:
        model_cfg = ModelConfig(**json.loads(sidecar.read_text())) if sidecar.is_file() else ModelConfig()
    model = AMNet(model_cfg)
    params = load_checkpoint(path, expected=model.params.shapes())
    model.params.load_state_dict(params)
    return model
