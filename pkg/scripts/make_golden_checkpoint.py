"""Write tests/data/golden.amnt byte by byte with ``struct``, without using amnet.checkpoint.

The checkpoint tests compare the library's writer against this file, so the two
must stay independent.
"""

import argparse
import struct
from pathlib import Path

# name -> (shape, row-major values); values are exactly representable in float32
GOLDEN = [
    ("anet.conv1.weight", (2, 1, 1, 3), [0.5, -1.25, 2.0, 0.0, 3.75, -0.125]),
    ("anet.conv1.bias", (2,), [1.0, -2.5]),
    ("head.fuse.bias", (1,), [0.0625]),
]


def golden_bytes() -> bytes:
    out = b"AMNT" + struct.pack("<II", 1, len(GOLDEN))
    for name, shape, values in GOLDEN:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<B", len(shape)) + b"".join(struct.pack("<I", d) for d in shape)
        out += b"".join(struct.pack("<f", v) for v in values)
    return out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data" / "golden.amnt"))
    args = p.parse_args()
    Path(args.out).write_bytes(golden_bytes())
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
