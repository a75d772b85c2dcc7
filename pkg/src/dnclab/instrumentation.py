"""Export of controller state traces and memory attention mode values for
offline analysis (JSON-lines traces and binned mode histograms)."""

from __future__ import annotations

import csv
import json

import numpy as np

from . import autodiff as ad
from . import core, tasks
from .checkpoint import Checkpoint
from .errors import ConfigError
from .evaluation import rollout_steps
from .tasks import TaskKind

TRACE_SCHEMA = "dnclab.traces"
TRACE_VERSION = 1
MODES_SCHEMA_LINE = "# schema=dnclab.modes.v1"
HIST_BINS = 50

ENCODING = "encoding"
QUERY = "query"
DECODING = "decoding"


def phase_tags(kind: TaskKind, n_in: int, steps: int) -> list[str]:
    """Phase of every 0-based step: input rows plus the end-of-input flag are
    the encoding phase; search has a two-row query phase."""
    phases = []
    for t in range(steps):
        if t <= n_in:
            phases.append(ENCODING)
        elif kind is TaskKind.SEARCH and t <= n_in + 2:
            phases.append(QUERY)
        else:
            phases.append(DECODING)
    return phases


def _rollout(ckpt: Checkpoint, kind: TaskKind, n_in: int, n_samples: int, seed: int):
    rng = np.random.default_rng([seed, n_in, n_samples])
    batch = tasks.generate_batch(kind, n_in, n_samples, rng)
    steps = rollout_steps(kind, n_in)
    inputs = np.zeros((n_samples, steps, batch.inputs.shape[2]))
    inputs[:, : batch.steps] = batch.inputs
    with ad.no_grad():
        _, traces = core.unroll(inputs, ckpt.params, ckpt.config)
    return traces, phase_tags(kind, n_in, steps)


def record_traces(
    ckpt: Checkpoint,
    path,
    kind: TaskKind | None = None,
    n_in: int = 30,
    n_samples: int = 64,
    seed: int = 0,
) -> int:
    """Roll out fresh episodes and write one record per (sample, step).

    Records carry the pre-compression cell state for compressing variants and
    the plain cell state otherwise (the hidden activation for the stateless
    controller).  Returns the number of records written.
    """
    kind = kind or ckpt.task
    if kind is None:
        raise ConfigError("checkpoint does not record a task; pass one explicitly")
    traces, phases = _rollout(ckpt, kind, n_in, n_samples, seed)
    header = {
        "schema": TRACE_SCHEMA,
        "version": TRACE_VERSION,
        "trial": ckpt.seed,
        "task": kind.tag,
        "variant": ckpt.config.variant.tag,
        "n_in": n_in,
        "n_samples": n_samples,
        "hidden_size": ckpt.config.controller.hidden_size,
        "step_index": "0-based",
    }
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for t, trace in enumerate(traces):
            cells = trace.c_record.data
            gates = trace.g_a.data
            modes = trace.pi_content.data
            for b in range(n_samples):
                fh.write(
                    json.dumps(
                        {
                            "trial": ckpt.seed,
                            "sample": b,
                            "step": t,
                            "phase": phases[t],
                            "c": cells[b].tolist(),
                            "g_a": float(gates[b, 0]),
                            "pi_content": modes[b].tolist(),
                        }
                    )
                    + "\n"
                )
                count += 1
    return count


def mode_histograms(
    ckpt: Checkpoint,
    path,
    kind: TaskKind | None = None,
    n_in: int = 15,
    n_samples: int = 64,
    seed: int = 0,
) -> dict:
    """Per-phase histograms (50 uniform bins on [0,1]) of the allocation gate
    (write mode) and the content component of the read modes, aggregated over
    read heads.  Writes CSV rows (phase, variable, bin_lo, bin_hi, count)."""
    kind = kind or ckpt.task
    if kind is None:
        raise ConfigError("checkpoint does not record a task; pass one explicitly")
    traces, phases = _rollout(ckpt, kind, n_in, n_samples, seed)
    write_vals: dict[str, list] = {}
    read_vals: dict[str, list] = {}
    for t, trace in enumerate(traces):
        write_vals.setdefault(phases[t], []).append(trace.g_a.data[:, 0])
        read_vals.setdefault(phases[t], []).append(trace.pi_content.data.ravel())
    edges = np.linspace(0.0, 1.0, HIST_BINS + 1)
    table = {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(MODES_SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(["phase", "variable", "bin_lo", "bin_hi", "count"])
        for phase in dict.fromkeys(phases):  # episode order, deduplicated
            for variable, chunks in (("write_mode", write_vals), ("read_mode", read_vals)):
                values = np.concatenate(chunks[phase])
                counts, _ = np.histogram(values, bins=edges)
                table[(phase, variable)] = counts
                for i, c in enumerate(counts):
                    writer.writerow(
                        [phase, variable, f"{edges[i]:.2f}", f"{edges[i + 1]:.2f}", int(c)]
                    )
    return table
