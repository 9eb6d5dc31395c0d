"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"AMNT"  | u32 version = 1 | u32 param count
    repeated: u16 name length | UTF-8 name | u8 ndim | u32 dim * ndim | f32 values, row-major
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np

MAGIC = b"AMNT"
VERSION = 1


class CheckpointError(ValueError):
    """Corrupt file, unsupported version, or parameters that do not fit the model."""


def dumps(params) -> bytes:
    """Serialize ``name -> array`` pairs (a mapping or a ParamStore)."""
    items = list(params.items())
    out = [MAGIC, struct.pack("<II", VERSION, len(items))]
    for name, value in items:
        arr = np.asarray(getattr(value, "data", value), dtype="<f4")
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF or arr.ndim > 0xFF:
            raise CheckpointError(f"{name}: name or rank too large for the format")
        out.append(struct.pack("<H", len(raw)) + raw)
        out.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(out)


def loads(blob: bytes) -> "OrderedDict[str, np.ndarray]":
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError(f"truncated checkpoint at byte {pos}: need {n} bytes for {what}, "
                                  f"{len(blob) - pos} left")
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    magic = take(4, "magic")
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r} at byte 0, expected {MAGIC!r}")
    version, count = struct.unpack("<II", take(8, "header"))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} at byte 4")
    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for i in range(count):
        (nlen,) = struct.unpack("<H", take(2, f"name length of parameter #{i}"))
        raw = take(nlen, f"name of parameter #{i}")
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError(f"parameter #{i}: name is not UTF-8 at byte {pos - nlen}") from None
        (ndim,) = struct.unpack("<B", take(1, f"rank of {name}"))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, f"dims of {name}"))
        n = int(np.prod(dims)) if ndim else 1
        data = take(4 * n, f"values of {name}")
        if name in params:
            raise CheckpointError(f"duplicate parameter {name!r}")
        params[name] = np.frombuffer(data, dtype="<f4").reshape(dims).astype(np.float32)
    if pos != len(blob):
        raise CheckpointError(f"{len(blob) - pos} trailing bytes after the last parameter (byte {pos})")
    return params


def save_checkpoint(params, path) -> None:
    Path(path).write_bytes(dumps(params))


def load_checkpoint(path, expected: dict | None = None) -> "OrderedDict[str, np.ndarray]":
    """Read a checkpoint; with ``expected`` (name -> shape) also check it fits the architecture."""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from None
    params = loads(blob)
    if expected is not None:
        check_architecture(params, expected)
    return params


def check_architecture(params, expected: dict) -> None:
    problems = []
    for name, shape in expected.items():
        if name not in params:
            problems.append(f"missing {name} (expected {tuple(shape)})")
        elif tuple(params[name].shape) != tuple(shape):
            problems.append(f"{name}: expected {tuple(shape)}, found {tuple(params[name].shape)}")
    for name in params:
        if name not in expected:
            problems.append(f"unexpected {name} {tuple(params[name].shape)}")
    if problems:
        raise CheckpointError("checkpoint does not match the model architecture: " + "; ".join(problems))
