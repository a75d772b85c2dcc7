"""Task losses, gradient clipping, ADAM, and the training loop with uniform
length sampling and out-of-distribution checkpoint selection."""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt_io
from . import core, regularization, tasks
from .autodiff import Tensor
from .core import DncConfig, DncParams
from .errors import ConfigError, NumericsError
from .evaluation import evaluate_batch_metric
from .tasks import TaskBatch, TaskKind, TaskSample


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    iterations: int = 300_000
    train_len_min: int = 5
    train_len_max: int = 15
    ood_eval_len: int = 30
    ood_eval_every: int = 10
    ood_window: int = 500
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_value: float = 10.0
    seed: int = 0
    # desk-scale convenience: stop once a fresh in-distribution batch per
    # training length reaches this accuracy (None trains to `iterations`)
    early_stop_accuracy: float | None = None
    early_stop_every: int = 250

    def __post_init__(self):
        positive = (
            ("batch_size", self.batch_size),
            ("train_len_min", self.train_len_min),
            ("train_len_max", self.train_len_max),
            ("ood_eval_len", self.ood_eval_len),
            ("ood_eval_every", self.ood_eval_every),
            ("ood_window", self.ood_window),
            ("learning_rate", self.learning_rate),
            ("clip_value", self.clip_value),
            ("early_stop_every", self.early_stop_every),
        )
        for name, value in positive:
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.train_len_min > self.train_len_max:
            raise ConfigError(
                f"train_len_min {self.train_len_min} > train_len_max {self.train_len_max}"
            )


def _masked_losses(outputs, targets, mask, kind: TaskKind):
    """Per-sample loss vector (B,) from (B,T,Y) outputs, constant targets and
    (B,T) mask: masked MSE, or sigmoid cross-entropy for the logic task."""
    counts = mask.sum(axis=1)
    if (counts == 0).any():
        raise ConfigError("loss mask is empty for at least one sample")
    mask3 = mask[:, :, None].astype(float)
    if kind is TaskKind.LOGIC:
        per_entry = ad.bce_with_logits(outputs, targets) * Tensor(mask3)
        denom = counts.astype(float) * targets.shape[-1]
    else:
        diff = outputs - Tensor(targets)
        per_entry = ad.square(diff) * Tensor(mask3)
        denom = counts.astype(float) * targets.shape[-1]
    summed = ad.tsum(ad.tsum(per_entry, axis=2), axis=1)
    return summed * Tensor(1.0 / denom)


def task_loss(outputs, sample: TaskSample):
    """Loss of a single sample: mean squared error over the masked decode
    steps and all output dimensions, or cross-entropy for logic."""
    outputs = ad.as_tensor(outputs)
    if outputs.ndim == 2:
        outputs = ad.reshape(outputs, (1,) + outputs.shape)
    losses = _masked_losses(
        outputs,
        sample.targets[None, :, :],
        sample.loss_mask[None, :],
        sample.meta.kind,
    )
    return ad.reshape(losses, ())


def batch_task_losses(outputs, batch: TaskBatch):
    kind = batch.samples[0].meta.kind
    return _masked_losses(ad.as_tensor(outputs), batch.targets, batch.loss_mask, kind)


def clip_gradients(grads: dict[str, np.ndarray], clip_value: float) -> dict[str, np.ndarray]:
    """Elementwise clamp of every gradient entry to [-clip_value, clip_value]."""
    if clip_value <= 0:
        raise ConfigError(f"clip_value must be positive, got {clip_value}")
    return {name: np.clip(g, -clip_value, clip_value) for name, g in grads.items()}


@dataclass
class AdamMoments:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamMoments":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_update(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    moments: AdamMoments,
    t: int,
    cfg: TrainConfig,
):
    """Bias-corrected ADAM step; returns new parameters, moments updated in
    place.  ``t`` is the 1-based step count."""
    if t < 1:
        raise ConfigError(f"adam step index must be >= 1, got {t}")
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate
    out = {}
    for name, p in params.items():
        g = grads[name]
        m = moments.m[name]
        v = moments.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        out[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return out, moments


@dataclass
class LogRow:
    iteration: int
    train_loss: float
    ood_loss: float | None = None
    ood_running_mean: float | None = None

    def as_csv(self) -> str:
        ood = "" if self.ood_loss is None else repr(self.ood_loss)
        mean = "" if self.ood_running_mean is None else repr(self.ood_running_mean)
        return f"{self.iteration},{self.train_loss!r},{ood},{mean}"


LOG_HEADER = "iteration,train_loss,ood_loss,ood_running_mean"


def write_log(rows: list[LogRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(LOG_HEADER + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")


@dataclass
class TrainResult:
    best_iteration: int
    best_state: dict[str, np.ndarray]
    best_ood_mean: float | None
    final_params: DncParams
    log_rows: list[LogRow]
    stopped_at: int
    best_path: Path | None = None

    def best_params(self, cfg: DncConfig) -> DncParams:
        params = core.init_params(cfg, seed=0)
        ckpt_io.restore(params, self.best_state)
        return params


def _batch_loss(params, dnc_cfg, batch, use_reg):
    outputs, traces = core.unroll(batch.inputs, params, dnc_cfg)
    task_l = batch_task_losses(outputs, batch)
    if not use_reg:
        return ad.tmean(task_l), outputs
    states = core.carried_cell_states(traces, dnc_cfg)
    state_l = regularization.state_loss_batched(states, dnc_cfg.reg.top_k)
    return regularization.combined_loss(task_l, state_l, dnc_cfg.reg.alpha), outputs


def train(
    cfg: TrainConfig,
    dnc_cfg: DncConfig,
    task: TaskKind,
    out_dir: Path | str | None = None,
) -> TrainResult:
    """Run the optimization loop.

    Per iteration: one batch at a uniformly drawn input length, forward,
    combined loss, backward, clip, ADAM.  Every ``ood_eval_every`` iterations
    the task loss of one out-of-distribution batch feeds a running mean over
    the last ``ood_window`` measurements; the parameters are checkpointed
    whenever that mean strictly improves.
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    params = core.init_params(dnc_cfg, cfg.seed)
    names = [name for name, _ in params.named_tensors()]
    moments = AdamMoments.zeros_like({n: t.data for n, t in params.named_tensors()})
    use_reg = dnc_cfg.variant.uses_reg

    ood_hist = collections.deque(maxlen=cfg.ood_window)
    best_mean = None
    best_state = ckpt_io.snapshot(params)
    best_iteration = 0
    best_file = None
    log_rows: list[LogRow] = []
    stopped_at = 0
    len_lo = max(cfg.train_len_min, tasks.min_input_length(task))
    len_hi = max(cfg.train_len_max, len_lo)

    def save_best(iteration):
        nonlocal best_file
        if out_dir is None:
            return
        fname = out_dir / f"ckpt_{iteration}.bin"
        ckpt_io.save(fname, params, dnc_cfg, iteration, cfg.seed, task=task)
        if best_file is not None and best_file != fname:
            best_file.unlink(missing_ok=True)
        best_file = fname

    for it in range(1, cfg.iterations + 1):
        stopped_at = it
        n_in = int(rng.integers(len_lo, len_hi + 1))
        batch = tasks.generate_batch(task, n_in, cfg.batch_size, rng)
        loss, _ = _batch_loss(params, dnc_cfg, batch, use_reg)
        train_loss = float(loss.data)
        params.zero_grads()
        loss.backward()
        grads = {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in params.named_tensors()
        }
        if not np.isfinite(train_loss) or any(
            not np.isfinite(g).all() for g in grads.values()
        ):
            worst = max(
                names,
                key=lambda n: np.nan_to_num(np.abs(grads[n]), nan=np.inf).max(),
            )
            raise NumericsError(
                f"non-finite loss or gradient at iteration {it}; "
                f"largest-gradient parameter: {worst}"
            )
        grads = clip_gradients(grads, cfg.clip_value)
        new_values, moments = adam_update(
            {n: t.data for n, t in params.named_tensors()}, grads, moments, it, cfg
        )
        for name, tensor in params.named_tensors():
            tensor.data = new_values[name]

        row = LogRow(iteration=it, train_loss=train_loss)
        if it % cfg.ood_eval_every == 0:
            ood_rng = np.random.default_rng([cfg.seed, 1, it])
            ood_batch = tasks.generate_batch(task, cfg.ood_eval_len, cfg.batch_size, ood_rng)
            with ad.no_grad():
                ood_loss, _ = _batch_loss(params, dnc_cfg, ood_batch, use_reg=False)
            row.ood_loss = float(ood_loss.data)
            ood_hist.append(row.ood_loss)
            row.ood_running_mean = float(np.mean(ood_hist))
            if best_mean is None or row.ood_running_mean < best_mean:
                best_mean = row.ood_running_mean
                best_state = ckpt_io.snapshot(params)
                best_iteration = it
                save_best(it)
        log_rows.append(row)

        if (
            cfg.early_stop_accuracy is not None
            and it % cfg.early_stop_every == 0
            and _in_dist_accuracy(params, dnc_cfg, task, cfg, it) >= cfg.early_stop_accuracy
        ):
            break

    best_path = None
    if out_dir is not None:
        if best_file is None:
            save_best(best_iteration)
        best_path = out_dir / "best.ckpt"
        restored = core.init_params(dnc_cfg, seed=0)
        ckpt_io.restore(restored, best_state)
        ckpt_io.save(best_path, restored, dnc_cfg, best_iteration, cfg.seed, task=task)
        write_log(log_rows, out_dir / "log.csv")
    return TrainResult(
        best_iteration=best_iteration,
        best_state=best_state,
        best_ood_mean=best_mean,
        final_params=params,
        log_rows=log_rows,
        stopped_at=stopped_at,
        best_path=best_path,
    )


def _in_dist_accuracy(params, dnc_cfg, task, cfg: TrainConfig, it: int) -> float:
    len_lo = max(cfg.train_len_min, tasks.min_input_length(task))
    scores = [
        evaluate_batch_metric(
            params, dnc_cfg, task, n, cfg.batch_size, np.random.default_rng([cfg.seed, 2, it, n])
        )
        for n in range(len_lo, cfg.train_len_max + 1)
    ]
    return float(np.mean(scores))
