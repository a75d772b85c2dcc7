"""Episode generators for the seven algorithmic tasks, channel codecs, and
the sample dump format.

Common layout (0-indexed rows of the (T, X) input matrix): task input on rows
0..N_in-1, end-of-input flag on the control channel at row N_in, answer rows
follow, and the signal channel target is 1.0 on the last row.  The loss mask
covers the answer rows plus the end-of-output row.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import logic
from .errors import ConfigError

ALPHABET = 5  # quinary digits 0..4


class TaskKind(enum.Enum):
    SORT = "sort"
    COPY = "copy"
    DIFFERENTIATION = "differentiation"
    SHIFT = "shift"
    ADD = "add"
    SEARCH = "search"
    LOGIC = "logic"

    @property
    def tag(self):
        return self.value


def task_dims(kind: TaskKind):
    """(input width X, output width Y) for one task."""
    if kind is TaskKind.ADD:
        return 3, 3
    if kind is TaskKind.LOGIC:
        return logic.ALPHABET_SIZE + 1, 1
    return 2, 2


def min_input_length(kind: TaskKind):
    return 2 if kind is TaskKind.DIFFERENTIATION else 1


@dataclass
class SampleMeta:
    kind: TaskKind
    n_in: int
    n_out: int
    input_symbols: tuple = ()
    result_symbols: tuple = ()
    query: int | None = None
    truth: bool | None = None


@dataclass
class TaskSample:
    inputs: np.ndarray  # (T, X)
    targets: np.ndarray  # (T, Y)
    loss_mask: np.ndarray  # (T,) bool
    meta: SampleMeta

    @property
    def n_total(self):
        return self.inputs.shape[0]


# channel codecs


def encode_digit(d):
    """Quinary digit 0..4 -> channel value in [-1, 1]."""
    return np.asarray(d, dtype=np.float64) / 2.0 - 1.0


def decode_digit(y):
    return np.clip(np.rint((np.asarray(y) + 1.0) * 2.0), 0, ALPHABET - 1).astype(int)


def encode_bit(b):
    return np.where(np.asarray(b) > 0, 1.0, -1.0)


def decode_bit(y):
    return (np.asarray(y) >= 0).astype(int)


def encode_position(j, n_in):
    return 0.0 if n_in == 1 else j / (n_in - 1)


def decode_position(y, n_in):
    return int(np.rint(np.asarray(y) * (n_in - 1)))


def encode_search_digit(d):
    return np.asarray(d, dtype=np.float64) / (ALPHABET - 1)


# generators


def _quinary_sample(kind, digits, result, n_in):
    n_out = len(result)
    n_total = 2 * n_in + 2
    inputs = np.zeros((n_total, 2))
    targets = np.zeros((n_total, 2))
    mask = np.zeros(n_total, dtype=bool)
    inputs[:n_in, 0] = encode_digit(np.asarray(digits))
    inputs[n_in, 1] = 1.0  # end-of-input flag
    targets[n_in + 1 : n_in + 1 + n_out, 0] = encode_digit(np.asarray(result))
    targets[n_total - 1, 1] = 1.0  # end-of-output flag
    mask[n_total - n_out - 1 :] = True
    return TaskSample(
        inputs=inputs,
        targets=targets,
        loss_mask=mask,
        meta=SampleMeta(
            kind=kind,
            n_in=n_in,
            n_out=n_out,
            input_symbols=tuple(int(d) for d in digits),
            result_symbols=tuple(int(d) for d in result),
        ),
    )


def generate_sort(n_in, rng):
    if n_in < 1:
        raise ConfigError(f"sort needs n_in >= 1, got {n_in}")
    digits = rng.integers(0, ALPHABET, size=n_in)
    return _quinary_sample(TaskKind.SORT, digits, np.sort(digits), n_in)


def generate_copy(n_in, rng):
    if n_in < 1:
        raise ConfigError(f"copy needs n_in >= 1, got {n_in}")
    digits = rng.integers(0, ALPHABET, size=n_in)
    return _quinary_sample(TaskKind.COPY, digits, digits, n_in)


def generate_differentiation(n_in, rng):
    if n_in < 2:
        raise ConfigError(f"differentiation needs n_in >= 2, got {n_in}")
    digits = rng.integers(0, ALPHABET, size=n_in)
    # prepended constant symbol keeps N_out == N_in; fixed as digit 0
    result = np.concatenate([[0], np.abs(np.diff(digits))])
    return _quinary_sample(TaskKind.DIFFERENTIATION, digits, result, n_in)


def generate_shift(n_in, rng):
    if n_in < 1:
        raise ConfigError(f"shift needs n_in >= 1, got {n_in}")
    digits = rng.integers(0, ALPHABET, size=n_in)
    return _quinary_sample(TaskKind.SHIFT, digits, np.roll(digits, n_in // 2), n_in)


def generate_add(n_in, rng):
    if n_in < 1:
        raise ConfigError(f"add needs n_in >= 1, got {n_in}")
    bits = rng.integers(0, 2, size=(n_in, 2))
    sums = bits.sum(axis=1)  # 0..2, i.e. binary 00 to 10
    n_total = 2 * n_in + 2
    inputs = np.zeros((n_total, 3))
    targets = np.zeros((n_total, 3))
    mask = np.zeros(n_total, dtype=bool)
    inputs[:n_in, 0] = encode_bit(bits[:, 0])
    inputs[:n_in, 1] = encode_bit(bits[:, 1])
    inputs[n_in, 2] = 1.0
    targets[n_in + 1 : n_in + 1 + n_in, 0] = encode_bit(sums >> 1)  # high digit
    targets[n_in + 1 : n_in + 1 + n_in, 1] = encode_bit(sums & 1)  # low digit
    targets[n_total - 1, 2] = 1.0
    mask[n_total - n_in - 1 :] = True
    return TaskSample(
        inputs=inputs,
        targets=targets,
        loss_mask=mask,
        meta=SampleMeta(
            kind=TaskKind.ADD,
            n_in=n_in,
            n_out=n_in,
            input_symbols=tuple((int(a), int(b)) for a, b in bits),
            result_symbols=tuple(int(s) for s in sums),
        ),
    )


def generate_search(n_in, rng):
    if n_in < 1:
        raise ConfigError(f"search needs n_in >= 1, got {n_in}")
    digits = rng.integers(0, ALPHABET, size=n_in)
    query = int(digits[rng.integers(0, n_in)])  # always present in the data
    positions = tuple(int(j) for j in np.flatnonzero(digits == query))
    n_out = len(positions)
    n_total = n_in + 3 + n_out + 1
    inputs = np.zeros((n_total, 2))
    targets = np.zeros((n_total, 2))
    mask = np.zeros(n_total, dtype=bool)
    inputs[:n_in, 0] = encode_search_digit(digits)
    inputs[n_in, 1] = 1.0  # end of input
    inputs[n_in + 1, 0] = encode_search_digit(query)
    inputs[n_in + 2, 1] = 1.0  # end of query
    for k, j in enumerate(positions):
        targets[n_in + 3 + k, 0] = encode_position(j, n_in)
    targets[n_total - 1, 1] = 1.0
    mask[n_in + 3 :] = True
    return TaskSample(
        inputs=inputs,
        targets=targets,
        loss_mask=mask,
        meta=SampleMeta(
            kind=TaskKind.SEARCH,
            n_in=n_in,
            n_out=n_out,
            input_symbols=tuple(int(d) for d in digits),
            result_symbols=positions,
            query=query,
        ),
    )


def generate_logic(n_in, rng):
    if n_in < 1:
        raise ConfigError(f"logic needs n_in >= 1, got {n_in}")
    target = bool(rng.random() < 0.5)
    tokens = logic.sample_formula_with_truth(n_in, target, rng)
    truth = logic.evaluate_formula(tokens)
    n_total = n_in + 2
    x = logic.ALPHABET_SIZE + 1
    inputs = np.zeros((n_total, x))
    targets = np.zeros((n_total, 1))
    mask = np.zeros(n_total, dtype=bool)
    for t, tok in enumerate(tokens):
        inputs[t, int(tok)] = 1.0
    inputs[n_in, x - 1] = 1.0  # control channel
    targets[n_total - 1, 0] = 1.0 if truth else 0.0
    mask[n_total - 1] = True
    return TaskSample(
        inputs=inputs,
        targets=targets,
        loss_mask=mask,
        meta=SampleMeta(
            kind=TaskKind.LOGIC,
            n_in=n_in,
            n_out=1,
            input_symbols=tuple(int(t) for t in tokens),
            truth=truth,
        ),
    )


_GENERATORS = {
    TaskKind.SORT: generate_sort,
    TaskKind.COPY: generate_copy,
    TaskKind.DIFFERENTIATION: generate_differentiation,
    TaskKind.SHIFT: generate_shift,
    TaskKind.ADD: generate_add,
    TaskKind.SEARCH: generate_search,
    TaskKind.LOGIC: generate_logic,
}


def generate(kind: TaskKind, n_in: int, rng) -> TaskSample:
    return _GENERATORS[kind](n_in, rng)


@dataclass
class TaskBatch:
    inputs: np.ndarray  # (B, T, X), zero-padded past each sample's episode
    targets: np.ndarray  # (B, T, Y)
    loss_mask: np.ndarray  # (B, T) bool
    samples: list[TaskSample] = field(default_factory=list)

    @property
    def batch_size(self):
        return self.inputs.shape[0]

    @property
    def steps(self):
        return self.inputs.shape[1]


def generate_batch(kind: TaskKind, n_in: int, batch_size: int, rng) -> TaskBatch:
    """One batch of equal-input-length episodes (episode lengths can still
    differ for search, hence the zero padding)."""
    samples = [generate(kind, n_in, rng) for _ in range(batch_size)]
    x, y = task_dims(kind)
    steps = max(s.n_total for s in samples)
    inputs = np.zeros((batch_size, steps, x))
    targets = np.zeros((batch_size, steps, y))
    mask = np.zeros((batch_size, steps), dtype=bool)
    for b, s in enumerate(samples):
        inputs[b, : s.n_total] = s.inputs
        targets[b, : s.n_total] = s.targets
        mask[b, : s.n_total] = s.loss_mask
    return TaskBatch(inputs=inputs, targets=targets, loss_mask=mask, samples=samples)


def answer_rows(meta: SampleMeta):
    """Row range [start, stop) holding the task answer symbols."""
    if meta.kind is TaskKind.LOGIC:
        return meta.n_in + 1, meta.n_in + 2
    if meta.kind is TaskKind.SEARCH:
        return meta.n_in + 3, meta.n_in + 3 + meta.n_out
    return meta.n_in + 1, meta.n_in + 1 + meta.n_out


def decode_output(kind: TaskKind, outputs, meta: SampleMeta):
    """Invert the channel encoding on the answer rows of one sample's (T, Y)
    output matrix; search decoding ignores the stop flag (the scorer owns it)."""
    outputs = np.asarray(outputs)
    start, stop = answer_rows(meta)
    if kind in (TaskKind.SORT, TaskKind.COPY, TaskKind.DIFFERENTIATION, TaskKind.SHIFT):
        return decode_digit(outputs[start:stop, 0])
    if kind is TaskKind.ADD:
        return np.stack(
            [decode_bit(outputs[start:stop, 0]), decode_bit(outputs[start:stop, 1])],
            axis=1,
        )
    if kind is TaskKind.SEARCH:
        return np.array(
            [decode_position(v, meta.n_in) for v in outputs[start:stop, 0]], dtype=int
        )
    if kind is TaskKind.LOGIC:
        return bool(outputs[meta.n_in + 1, 0] >= 0.0)
    raise ConfigError(f"unknown task kind {kind}")


SAMPLE_SCHEMA = {"schema": "dnclab.samples", "version": 1}


def dump_samples(kind: TaskKind, n_in: int, count: int, rng, path):
    """Write samples as JSON-lines with a schema header line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(SAMPLE_SCHEMA) + "\n")
        for _ in range(count):
            s = generate(kind, n_in, rng)
            meta = {
                "kind": s.meta.kind.tag,
                "n_in": s.meta.n_in,
                "n_out": s.meta.n_out,
                "input_symbols": list(s.meta.input_symbols),
                "result_symbols": list(s.meta.result_symbols),
                "query": s.meta.query,
                "truth": s.meta.truth,
            }
            fh.write(
                json.dumps(
                    {
                        "inputs": s.inputs.tolist(),
                        "targets": s.targets.tolist(),
                        "mask": s.loss_mask.astype(int).tolist(),
                        "meta": meta,
                    }
                )
                + "\n"
            )
