"""Time single-frame forwards of an untrained AMNet at a given input size.

    python3 scripts/forward_latency.py --template 64 --roi 192 --repeat 5
"""

import argparse
import time

import numpy as np

from amnet.model import AMNet, ModelConfig
from amnet.tensor import Tensor


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--template", type=int, default=64)
    p.add_argument("--roi", type=int, default=192)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    model = AMNet(ModelConfig(template_size=args.template, roi_size=args.roi), seed=0)
    rng = np.random.default_rng(0)
    z, zp = (Tensor(rng.random((1, 3, args.roi, args.roi)).astype(np.float32)) for _ in range(2))
    tmpl = Tensor(rng.random((1, 3, args.template, args.template)).astype(np.float32))
    model(z, zp, tmpl)  # warm-up
    times = []
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        model(z, zp, tmpl)
        times.append(time.perf_counter() - t0)
    t = np.array(times) * 1e3
    print(f"{args.template}/{args.roi}: median {np.median(t):.1f} ms, min {t.min():.1f} ms "
          f"over {args.repeat} forwards ({1e3 / np.median(t):.2f} FPS)")


if __name__ == "__main__":
    main()
