"""Command-line entry point: ``amnet {train,track,eval,synth}``.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 checkpoint error, 5 data error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .bench import GtEchoTracker, ModelTracker, ope_evaluate, write_report
from .checkpoint import CheckpointError
from .config import ConfigError, RunConfig, load_config
from .data import synth_corpus
from .sequences import FormatError, load_otb_dataset, load_otb_sequence, write_otb_sequence
from .tracker import track_sequence
from .train import NumericError, load_model, save_model, train, write_history

log = logging.getLogger("amnet")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECKPOINT, EXIT_DATA = 0, 2, 3, 4, 5


def _config(path) -> RunConfig:
    return load_config(path) if path else RunConfig()


def cmd_train(args) -> int:
    cfg = _config(args.config)
    tcfg = cfg.train if args.seed is None else dataclasses.replace(cfg.train, seed=args.seed)
    corpus = synth_corpus(cfg.synth, tcfg.seed)
    model, history = train(tcfg, corpus, cfg.model)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    write_history(history, out.with_suffix(".loss.csv"))
    print(f"wrote {out} ({len(history)} steps, final loss {history[-1].loss:.6f})" if history else f"wrote {out}")
    return EXIT_OK


def render_frame(frame: np.ndarray, boxes, path) -> None:
    """PNG with each ``(box, colour)`` pair drawn as a rectangle outline."""
    im = Image.fromarray(np.asarray(frame, dtype=np.uint8))
    draw = ImageDraw.Draw(im)
    for box, colour in boxes:
        x, y, w, h = box
        draw.rectangle([x, y, x + w - 1, y + h - 1], outline=colour, width=2)
    im.save(path, format="PNG")


def cmd_track(args) -> int:
    model = load_model(args.ckpt, _config(args.config).model if args.config else None)
    seq = load_otb_sequence(args.seq)
    res = track_sequence(model, seq, seq.boxes[0])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        for i, b in enumerate(res.boxes):
            w.writerow([i] + [f"{v:.10g}" for v in b.as_tuple()])
    if args.render:
        rdir = Path(args.render)
        rdir.mkdir(parents=True, exist_ok=True)
        for i, b in enumerate(res.boxes):
            render_frame(seq.frame(i), [(tuple(seq.boxes[i]), (0, 255, 0)), (b.as_tuple(), (255, 0, 0))],
                         rdir / f"{i + 1:04d}.png")
    log.info("tracked %d frames at %.1f fps", len(seq), res.fps)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args.config)
    names = cfg.eval.sequences or None
    sequences = load_otb_dataset(args.dataset, names)
    out = Path(args.out)
    if args.oracle:
        report = ope_evaluate(GtEchoTracker(), sequences, "gt-echo")
        write_report(report, out)
        print(f"gt-echo: P@20 {report.precision_at_20:.4f} AUC {report.success_auc:.4f}")
        return EXIT_OK
    if not args.ckpt:
        raise ConfigError("--ckpt: required unless --oracle is given")
    model = load_model(args.ckpt, cfg.model if args.config else None)
    report = ope_evaluate(ModelTracker(model), sequences, "amnet")
    if not args.ablation:
        write_report(report, out)
        print(f"amnet: P@20 {report.precision_at_20:.4f} AUC {report.success_auc:.4f} fps {report.fps:.1f}")
        return EXIT_OK
    anet_model = load_model(args.anet_ckpt, cfg.model if args.config else None) if args.anet_ckpt \
        else model.without_motion()
    anet = ope_evaluate(ModelTracker(anet_model), sequences, "anet")
    write_report(report, out / "amnet")
    write_report(anet, out / "anet")
    print(f"amnet: AUC {report.success_auc:.4f} P@20 {report.precision_at_20:.4f}")
    print(f"anet:  AUC {anet.success_auc:.4f} P@20 {anet.precision_at_20:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config(args.config)
    out = Path(args.out)
    for seq in synth_corpus(cfg.synth, args.seed):
        write_otb_sequence(seq, out / seq.name)
    print(f"wrote {cfg.synth.n_sequences} sequences to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amnet", description="Appearance + motion two-stream tracker")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train on a synthetic corpus")
    t.add_argument("--config", required=True, help="JSON run configuration")
    t.add_argument("--out", required=True, help="checkpoint path; the loss CSV goes next to it")
    t.add_argument("--seed", type=int, default=None, help="overrides train.seed")
    t.set_defaults(func=cmd_train)

    k = sub.add_parser("track", help="track one OTB-layout sequence")
    k.add_argument("--ckpt", required=True)
    k.add_argument("--seq", required=True, help="directory with img/ and groundtruth_rect.txt")
    k.add_argument("--out", required=True, help="boxes.csv: frame_index,x,y,w,h")
    k.add_argument("--render", default=None, help="directory for PNG frames with drawn boxes")
    k.add_argument("--config", default=None, help="model section overrides the checkpoint sidecar")
    k.set_defaults(func=cmd_track)

    e = sub.add_parser("eval", help="one-pass evaluation over a dataset directory")
    e.add_argument("--ckpt", default=None)
    e.add_argument("--dataset", required=True)
    e.add_argument("--out", required=True, help="report directory")
    e.add_argument("--config", default=None)
    e.add_argument("--oracle", action="store_true", help="evaluate the ground-truth echo tracker")
    e.add_argument("--ablation", action="store_true", help="also evaluate the appearance stream alone")
    e.add_argument("--anet-ckpt", default=None, help="separately trained appearance-only checkpoint")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="write a synthetic corpus in OTB layout")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except CheckpointError as e:
        print(f"checkpoint error: {e}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (FormatError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
