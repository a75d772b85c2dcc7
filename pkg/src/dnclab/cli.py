"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure
during training.  ``DNCLAB_THREADS`` bounds BLAS parallelism (0 = auto) and
must take effect before numpy loads, so all heavy imports happen inside
``main``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path


def _apply_thread_env():
    raw = os.environ.get("DNCLAB_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise SystemExit(f"DNCLAB_THREADS must be an integer, got {raw!r}")
    if n <= 0:
        return  # 0 = auto: leave the BLAS defaults alone
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnclab",
        description="Train, evaluate, extend, and instrument DNC models on algorithmic tasks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from an experiment config")
    p_train.add_argument("--config", required=True, help="experiment config JSON")
    p_train.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_train.add_argument("--out", required=True, help="output root directory")
    p_train.add_argument("--iterations", type=int, default=None, help="override iteration count")

    p_eval = sub.add_parser("eval", help="input-length sweep of a trained checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--lengths", default="2:100", help="inclusive range A:B")
    p_eval.add_argument("--batches", type=int, default=10)
    p_eval.add_argument("--batch-size", type=int, default=64)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", required=True, help="results CSV path")

    p_ext = sub.add_parser("extend", help="memory-extension sweep of a trained checkpoint")
    p_ext.add_argument("--checkpoint", required=True)
    p_ext.add_argument("--mem-slots", type=int, default=500)
    p_ext.add_argument("--batches", type=int, default=3)
    p_ext.add_argument("--batch-size", type=int, default=64)
    p_ext.add_argument("--max-len", type=int, default=1000)
    p_ext.add_argument("--seed", type=int, default=0)
    p_ext.add_argument("--out", required=True, help="results CSV path")

    p_trace = sub.add_parser("trace", help="export controller state traces")
    p_trace.add_argument("--checkpoint", required=True)
    p_trace.add_argument("--len", type=int, default=30, dest="n_in")
    p_trace.add_argument("--samples", type=int, default=64)
    p_trace.add_argument("--seed", type=int, default=0)
    p_trace.add_argument("--out", required=True, help="traces JSON-lines path")

    p_hist = sub.add_parser("hist", help="export memory attention mode histograms")
    p_hist.add_argument("--checkpoint", required=True)
    p_hist.add_argument("--len", type=int, default=15, dest="n_in")
    p_hist.add_argument("--samples", type=int, default=64)
    p_hist.add_argument("--seed", type=int, default=0)
    p_hist.add_argument("--out", required=True, help="modes CSV path")

    p_dump = sub.add_parser("dump", help="dump generated task samples as JSON-lines")
    p_dump.add_argument("--task", required=True)
    p_dump.add_argument("--n-in", type=int, required=True)
    p_dump.add_argument("--count", type=int, default=100)
    p_dump.add_argument("--seed", type=int, default=0)
    p_dump.add_argument("--out", required=True)
    return parser


def _cmd_train(args) -> int:
    import dataclasses

    from . import config as cfgmod
    from . import training

    exp = cfgmod.load_experiment(args.config)
    train_cfg = exp.train
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    if args.iterations is not None:
        train_cfg = dataclasses.replace(train_cfg, iterations=args.iterations)
    exp = dataclasses.replace(exp, train=train_cfg)

    run_dir = Path(args.out) / Path(args.config).stem / f"seed{train_cfg.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    cfgmod.save_experiment(exp, run_dir / "config.json")
    result = training.train(train_cfg, exp.dnc, exp.task, out_dir=run_dir)
    print(
        f"trained {exp.task.tag}/{exp.variant.tag} for {result.stopped_at} iterations; "
        f"best at {result.best_iteration} -> {result.best_path}"
    )
    return 0


def _parse_lengths(spec: str):
    from .errors import ConfigError

    try:
        lo, hi = (int(p) for p in spec.split(":"))
    except ValueError:
        raise ConfigError(f"lengths must look like A:B, got {spec!r}") from None
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad length range {spec!r}: need 1 <= A <= B")
    return list(range(lo, hi + 1))


def _load_checkpoint(path):
    from . import checkpoint

    return checkpoint.load(path)


def _cmd_eval(args) -> int:
    from . import evaluation

    ckpt = _load_checkpoint(args.checkpoint)
    records = evaluation.length_sweep(
        ckpt,
        _parse_lengths(args.lengths),
        batches_per_length=args.batches,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    result = evaluation.TrialResult(
        task=ckpt.task,
        variant=ckpt.config.variant.tag,
        trial=ckpt.seed,
        records=records,
        checkpoint_path=str(args.checkpoint),
    )
    evaluation.write_results_csv([result], args.out)
    print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _cmd_extend(args) -> int:
    from . import evaluation

    ckpt = _load_checkpoint(args.checkpoint)
    records = evaluation.extension_sweep(
        ckpt,
        new_num_slots=args.mem_slots,
        batches_per_length=args.batches,
        batch_size=args.batch_size,
        seed=args.seed,
        lengths=[l for l in evaluation.extension_grid(args.max_len)
                 if l >= _min_len(ckpt)],
    )
    result = evaluation.TrialResult(
        task=ckpt.task,
        variant=ckpt.config.variant.tag,
        trial=ckpt.seed,
        records=records,
        checkpoint_path=str(args.checkpoint),
    )
    evaluation.write_results_csv([result], args.out)
    print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _min_len(ckpt):
    from . import tasks
    from .errors import ConfigError

    if ckpt.task is None:
        raise ConfigError("checkpoint does not record a task")
    return tasks.min_input_length(ckpt.task)


def _cmd_trace(args) -> int:
    from . import instrumentation

    ckpt = _load_checkpoint(args.checkpoint)
    n = instrumentation.record_traces(
        ckpt, args.out, n_in=args.n_in, n_samples=args.samples, seed=args.seed
    )
    print(f"wrote {n} trace records to {args.out}")
    return 0


def _cmd_hist(args) -> int:
    from . import instrumentation

    ckpt = _load_checkpoint(args.checkpoint)
    instrumentation.mode_histograms(
        ckpt, args.out, n_in=args.n_in, n_samples=args.samples, seed=args.seed
    )
    print(f"wrote mode histograms to {args.out}")
    return 0


def _cmd_dump(args) -> int:
    import numpy as np

    from . import tasks
    from .errors import ConfigError

    try:
        kind = tasks.TaskKind(args.task)
    except ValueError:
        raise ConfigError(
            f"unknown task {args.task!r}; expected one of {[k.tag for k in tasks.TaskKind]}"
        ) from None
    tasks.dump_samples(kind, args.n_in, args.count, np.random.default_rng(args.seed), args.out)
    print(f"wrote {args.count} samples to {args.out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "extend": _cmd_extend,
    "trace": _cmd_trace,
    "hist": _cmd_hist,
    "dump": _cmd_dump,
}


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)

    from .errors import ConfigError, NumericsError

    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
