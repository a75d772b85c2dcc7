"""Scoring of rollouts, input-length sweeps, and the post-hoc memory
extension sweep.  Metrics are classification accuracy except for search,
which uses the hit rate of emitted positions."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import core, tasks
from .checkpoint import Checkpoint
from .core import DncConfig, DncParams
from .errors import ConfigError
from .tasks import TaskBatch, TaskKind, TaskSample

SIGNAL_STOP = 0.8  # search output ends at the first signal value above this


@dataclass
class TrialResult:
    task: TaskKind
    variant: str
    trial: int
    records: list[tuple[int, float, int]] = field(default_factory=list)  # (length, metric, n)
    checkpoint_path: str | None = None


def score_sample(kind: TaskKind, outputs, sample: TaskSample) -> float:
    """Per-sample metric in [0, 1] from one (T, Y) output matrix."""
    outputs = np.asarray(outputs)
    meta = sample.meta
    if kind in (TaskKind.SORT, TaskKind.COPY, TaskKind.DIFFERENTIATION, TaskKind.SHIFT):
        decoded = tasks.decode_output(kind, outputs, meta)
        truth = np.asarray(meta.result_symbols)
        return float(np.mean(decoded == truth))
    if kind is TaskKind.ADD:
        decoded = tasks.decode_output(kind, outputs, meta)
        sums = np.asarray(meta.result_symbols)
        truth = np.stack([sums >> 1, sums & 1], axis=1)
        return float(np.mean((decoded == truth).all(axis=1)))
    if kind is TaskKind.LOGIC:
        return float(tasks.decode_output(kind, outputs, meta) == meta.truth)
    if kind is TaskKind.SEARCH:
        found = set()
        start = meta.n_in + 3
        for k in range(meta.n_in):  # the answer never exceeds N_in positions
            row = start + k
            if row >= outputs.shape[0] or outputs[row, 1] > SIGNAL_STOP:
                break
            found.add(tasks.decode_position(outputs[row, 0], meta.n_in))
        truth = set(meta.result_symbols)
        return len(found & truth) / len(truth)
    raise ConfigError(f"unknown task kind {kind}")


def rollout_steps(kind: TaskKind, n_in: int) -> int:
    """Episode length to roll out at evaluation time.  Search gets the full
    window of N_in possible positions plus the stop step."""
    if kind is TaskKind.SEARCH:
        return 2 * n_in + 4
    if kind is TaskKind.LOGIC:
        return n_in + 2
    return 2 * n_in + 2


def _eval_inputs(batch: TaskBatch, kind: TaskKind, n_in: int) -> np.ndarray:
    steps = rollout_steps(kind, n_in)
    if batch.steps >= steps:
        return batch.inputs
    b, _, x = batch.inputs.shape
    padded = np.zeros((b, steps, x))
    padded[:, : batch.steps] = batch.inputs
    return padded


def evaluate_batch_metric(
    params: DncParams, cfg: DncConfig, kind: TaskKind, n_in: int, batch_size: int, rng
) -> float:
    """Mean metric of one fresh batch under the current parameters."""
    batch = tasks.generate_batch(kind, n_in, batch_size, rng)
    with ad.no_grad():
        outputs, _ = core.unroll(_eval_inputs(batch, kind, n_in), params, cfg)
    out = outputs.data
    return float(
        np.mean([score_sample(kind, out[b], s) for b, s in enumerate(batch.samples)])
    )


def length_sweep(
    ckpt: Checkpoint,
    lengths,
    batches_per_length: int = 10,
    batch_size: int = 64,
    seed: int = 0,
    kind: TaskKind | None = None,
) -> list[tuple[int, float, int]]:
    """Mean metric per input length over fresh seeded samples."""
    kind = kind or ckpt.task
    if kind is None:
        raise ConfigError("checkpoint does not record a task; pass one explicitly")
    records = []
    for length in lengths:
        if length < tasks.min_input_length(kind):
            raise ConfigError(f"{kind.tag} needs input length >= {tasks.min_input_length(kind)}")
        scores = []
        for b in range(batches_per_length):
            rng = np.random.default_rng([seed, length, b])
            scores.append(
                evaluate_batch_metric(ckpt.params, ckpt.config, kind, length, batch_size, rng)
            )
        records.append((int(length), float(np.mean(scores)), batches_per_length * batch_size))
    return records


def extension_grid(max_len: int = 1000) -> list[int]:
    """Sweep lengths 2..1000 with intervals growing from 5 to 100."""
    grid = [2]
    grid += list(range(5, 51, 5))
    grid += list(range(60, 101, 10))
    grid += list(range(125, 251, 25))
    grid += list(range(300, 501, 50))
    grid += list(range(600, 1001, 100))
    return [g for g in grid if g <= max_len]


def extension_sweep(
    ckpt: Checkpoint,
    new_num_slots: int = 500,
    batches_per_length: int = 3,
    batch_size: int = 64,
    seed: int = 0,
    lengths=None,
    kind: TaskKind | None = None,
) -> list[tuple[int, float, int]]:
    """Swap in the larger memory, then run the progressive-interval sweep."""
    params, cfg = core.extend_memory(ckpt.params, ckpt.config, new_num_slots)
    extended = Checkpoint(
        params=params, config=cfg, iteration=ckpt.iteration, seed=ckpt.seed, task=ckpt.task
    )
    if lengths is None:
        lengths = extension_grid()
        low = tasks.min_input_length(kind or ckpt.task)
        lengths = [l for l in lengths if l >= low]
    return length_sweep(
        extended, lengths, batches_per_length=batches_per_length,
        batch_size=batch_size, seed=seed, kind=kind,
    )


def max_generalization_length(per_trial_records, threshold: float = 0.95) -> int:
    """Largest length L whose whole sweep prefix has an across-trial median
    metric above ``threshold``; 0 when even the shortest length fails."""
    if not per_trial_records:
        raise ConfigError("need at least one trial")
    by_length = {}
    for records in per_trial_records:
        for length, metric, _ in records:
            by_length.setdefault(int(length), []).append(float(metric))
    best = 0
    for length in sorted(by_length):
        if float(np.median(by_length[length])) > threshold:
            best = length
        else:
            break
    return best


def write_results_csv(results: list[TrialResult], path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "variant", "trial", "length", "metric", "n"])
        for res in results:
            for length, metric, n in res.records:
                writer.writerow([res.task.tag, res.variant, res.trial, length, repr(float(metric)), n])


def read_results_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {
                "task": row["task"],
                "variant": row["variant"],
                "trial": int(row["trial"]),
                "length": int(row["length"]),
                "metric": float(row["metric"]),
                "n": int(row["n"]),
            }
            for row in csv.DictReader(fh)
        ]
