"""Checkpoint container: a JSON manifest (tensor names, shapes, byte offsets,
network config, training iteration) followed by one little-endian float64
blob, in a single file."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DncConfig, DncParams, init_params
from .errors import ConfigError
from .tasks import TaskKind

MAGIC = b"DNCCKPT1"


@dataclass
class Checkpoint:
    params: DncParams
    config: DncConfig
    iteration: int
    seed: int
    task: TaskKind | None = None


def save(path, params: DncParams, cfg: DncConfig, iteration: int, seed: int, task: TaskKind | None = None) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, tensor in params.named_tensors():
        arr = np.ascontiguousarray(tensor.data, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {
        "config": cfg.to_dict(),
        "iteration": int(iteration),
        "seed": int(seed),
        "task": task.tag if task is not None else None,
        "dtype": "<f8",
        "tensors": entries,
    }
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)


def load(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ConfigError(f"{path} is not a dnclab checkpoint")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    manifest = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    blob = raw[16 + hlen :]
    cfg = DncConfig.from_dict(manifest["config"])
    # template gives the right structure; every tensor is then overwritten
    params = init_params(cfg, seed=0)
    available = {e["name"]: e for e in manifest["tensors"]}
    for name, tensor in params.named_tensors():
        if name not in available:
            raise ConfigError(f"checkpoint {path} is missing tensor {name!r}")
        entry = available.pop(name)
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=start)
        if tuple(tensor.data.shape) != shape:
            raise ConfigError(
                f"checkpoint tensor {name!r} has shape {shape}, expected {tensor.data.shape}"
            )
        tensor.data = arr.reshape(shape).astype(np.float64)
    if available:
        raise ConfigError(f"checkpoint {path} has unknown tensors: {sorted(available)}")
    task = manifest.get("task")
    return Checkpoint(
        params=params,
        config=cfg,
        iteration=int(manifest["iteration"]),
        seed=int(manifest.get("seed", 0)),
        task=TaskKind(task) if task else None,
    )


def snapshot(params: DncParams) -> dict[str, np.ndarray]:
    return {name: tensor.data.copy() for name, tensor in params.named_tensors()}


def restore(params: DncParams, state: dict[str, np.ndarray]) -> None:
    for name, tensor in params.named_tensors():
        tensor.data = state[name].copy()
