"""JSON run configuration: model / train / synth / eval sections."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import SynthConfig
from .model import ModelConfig
from .train import TrainConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class EvalConfig:
    dataset_root: str | None = None
    sequences: list[str] = field(default_factory=list)


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"model": ModelConfig, "train": TrainConfig, "synth": SynthConfig, "eval": EvalConfig}


def _check_type(path: str, value, default) -> None:
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{path}: expected {type(default).__name__}, got {value!r}")


def _build(section: str, cls, data) -> object:
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object, got {type(data).__name__}")
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{section}.{key}: unknown field")
        _check_type(f"{section}.{key}", value, getattr(defaults, key))
    obj = cls(**data)
    if hasattr(obj, "validate"):
        try:
            obj.validate()
        except ValueError as e:
            msg = str(e)
            raise ConfigError(msg if msg.startswith(section + ".") else f"{section}: {msg}") from None
    return obj


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a JSON object")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown section")
    return RunConfig(**{k: _build(k, cls, data.get(k, {})) for k, cls in _SECTIONS.items()})


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"<file>: cannot read {p}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"<file>: {p} is not valid JSON (line {e.lineno}: {e.msg})") from None
    return from_dict(data)
