"""Train a desk-scale model and score it on held-out synthetic sequences.

Mirrors acceptance criteria 6 and 7: training on the corpus described by the
config, then one-pass evaluation on ten held-out 100-frame sequences with
camera jitter 2, and on the occlusion suite with and without the motion stream.

    python3 scripts/desk_experiment.py --config configs/desk.json --out runs/desk
"""

import argparse
import logging
import time
from pathlib import Path

from amnet.bench import ModelTracker, ope_evaluate, write_report
from amnet.config import load_config
from amnet.data import SynthConfig, synth_corpus, synth_sequence
from amnet.train import load_model, save_model, train, write_history


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", default="configs/desk.json")
    p.add_argument("--occlusion-config", default="configs/occlusion.json")
    p.add_argument("--out", default="runs/desk")
    p.add_argument("--ckpt", default=None, help="skip training and evaluate this checkpoint")
    p.add_argument("--held-out", type=int, default=10, help="number of held-out sequences")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = load_config(args.config)

    if args.ckpt:
        model = load_model(args.ckpt)
    else:
        corpus = synth_corpus(cfg.synth, cfg.train.seed)
        t0 = time.perf_counter()
        model, history = train(cfg.train, corpus, cfg.model)
        print(f"trained {cfg.train.steps} steps in {(time.perf_counter() - t0) / 60:.1f} min")
        save_model(model, out / "model.amnt")
        write_history(history, out / "model.loss.csv")

    held_out = [synth_sequence(SynthConfig(n_frames=100, camera_jitter=2), 900_000 + k) for k in range(args.held_out)]
    report = ope_evaluate(ModelTracker(model), held_out, "held_out")
    write_report(report, out / "held_out")
    print(f"held-out: mean IoU {report.mean_iou:.3f}  P@20 {report.precision_at_20:.3f}  "
          f"AUC {report.success_auc:.3f}  {report.fps:.1f} FPS")

    suite = synth_corpus(load_config(args.occlusion_config).synth, 800)
    for name, net in (("amnet", model), ("anet", model.without_motion())):
        r = ope_evaluate(ModelTracker(net), suite, name)
        write_report(r, out / "occlusion" / name)
        print(f"occlusion suite, {name}: AUC {r.success_auc:.3f}  P@20 {r.precision_at_20:.3f}")


if __name__ == "__main__":
    main()
