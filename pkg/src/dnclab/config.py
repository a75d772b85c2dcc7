"""Experiment configuration: strict JSON (de)serialization for the network,
training, and task settings.  Unknown keys are rejected everywhere."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .core import DncConfig, DncVariant
from .errors import ConfigError
from .memory import MemoryConfig
from .regularization import RegConfig
from .tasks import TaskKind, task_dims
from .training import TrainConfig


def _check_keys(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _pick(d, cls, where):
    _check_keys(d, [f.name for f in fields(cls)], where)
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


@dataclass
class ExperimentConfig:
    task: TaskKind
    variant: DncVariant
    dnc: DncConfig
    train: TrainConfig

    def to_dict(self):
        return {
            "task": self.task.tag,
            "variant": self.variant.tag,
            "memory": asdict(self.dnc.memory),
            "hidden_size": self.dnc.controller.hidden_size,
            "ffnn_layers": self.dnc.controller.ffnn_layers,
            "reg": asdict(self.dnc.reg),
            "train": asdict(self.train),
        }


_TOP_KEYS = ("task", "variant", "memory", "hidden_size", "ffnn_layers", "reg", "train")


def parse_experiment(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("experiment config must be a JSON object")
    _check_keys(d, _TOP_KEYS, "experiment config")
    for key in ("task", "variant"):
        if key not in d:
            raise ConfigError(f"experiment config is missing {key!r}")
    try:
        task = TaskKind(d["task"])
    except ValueError:
        raise ConfigError(
            f"unknown task {d['task']!r}; expected one of "
            f"{[k.tag for k in TaskKind]}"
        ) from None
    try:
        variant = DncVariant(d["variant"])
    except ValueError:
        raise ConfigError(
            f"unknown variant {d['variant']!r}; expected one of "
            f"{[v.tag for v in DncVariant]}"
        ) from None
    mem = _pick(d.get("memory", {}), MemoryConfig, "memory config")
    reg = _pick(d.get("reg", {}), RegConfig, "reg config")
    train = _pick(d.get("train", {}), TrainConfig, "train config")
    x, y = task_dims(task)
    dnc = DncConfig.build(
        variant,
        input_size=x,
        output_size=y,
        mem=mem,
        hidden_size=int(d.get("hidden_size", 128)),
        ffnn_layers=int(d.get("ffnn_layers", 3)),
        reg=reg,
    )
    return ExperimentConfig(task=task, variant=variant, dnc=dnc, train=train)


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_experiment(raw)


def save_experiment(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
