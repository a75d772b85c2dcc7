"""Benchmark of the compiled kernel backend against the numpy reference.

Times each kernel pair on representative shapes and a full training
iteration, and prints the speedups.  Force a backend for the full-iteration
row with DNCLAB_BACKEND (the kernels bind at import).

Run: python benchmarks/bench_backends.py [--repeats 50]
"""

import argparse
import time

import numpy as np

from dnclab import kernels
from dnclab.kernels import reference as ref

try:
    from dnclab.kernels import _ckernels as comp
except ImportError:
    comp = None


def timeit(fn, repeats):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_kernels(repeats):
    # shapes from the paper-scale configuration: B=64, N=50, W=16, R=4, H=128
    rng = np.random.default_rng(0)
    b, n, w, r = 64, 50, 16, 4
    x = rng.normal(size=(b, 128))
    xs = rng.normal(size=(b, r + 1))  # strength-sized inputs for oneplus
    y2 = ref.sigmoid_fwd(x)
    g = rng.normal(size=x.shape)
    mem = rng.normal(size=(b, n, w))
    key = rng.normal(size=(b, w))
    cos, mn, kn = ref.cosine_slots_fwd(mem, key)
    gcos = rng.normal(size=(b, n))
    u = rng.random((b, n))
    a, order = ref.allocation_fwd(u)
    ga = rng.normal(size=(b, n))
    link = rng.random((b, n, n)) * 0.02
    prec = rng.random((b, n)) * 0.3
    ww = rng.random((b, n)) * 0.3
    glink = rng.normal(size=(b, n, n))
    erase = rng.random((b, w))
    write = rng.normal(size=(b, w))
    gmem = rng.normal(size=(b, n, w))
    sm_in = rng.normal(size=(b, n))
    sm = ref.softmax_fwd(sm_in)

    cases = [
        ("sigmoid_fwd", lambda k: k.sigmoid_fwd(x)),
        ("sigmoid_bwd", lambda k: k.sigmoid_bwd(y2, g)),
        ("oneplus_fwd", lambda k: k.oneplus_fwd(xs)),
        ("softmax_fwd", lambda k: k.softmax_fwd(sm_in)),
        ("softmax_bwd", lambda k: k.softmax_bwd(sm, rng.normal(size=sm.shape))),
        ("cosine_fwd", lambda k: k.cosine_slots_fwd(mem, key)),
        ("cosine_bwd", lambda k: k.cosine_slots_bwd(mem, key, cos, mn, kn, gcos)),
        ("allocation_fwd", lambda k: k.allocation_fwd(u)),
        ("allocation_bwd", lambda k: k.allocation_bwd(u, order, ga)),
        ("link_fwd", lambda k: k.link_fwd(link, prec, ww)),
        ("link_bwd", lambda k: k.link_bwd(link, prec, ww, glink)),
        ("erase_write_fwd", lambda k: k.erase_write_fwd(mem, ww, erase, write)),
        ("erase_write_bwd", lambda k: k.erase_write_bwd(mem, ww, erase, write, gmem)),
    ]
    print(f"{'kernel':<18}{'numpy [us]':>12}{'compiled [us]':>15}{'speedup':>9}")
    for name, call in cases:
        t_ref = timeit(lambda: call(ref), repeats)
        if comp is None:
            print(f"{name:<18}{t_ref * 1e6:>12.1f}{'n/a':>15}{'':>9}")
            continue
        t_comp = timeit(lambda: call(comp), repeats)
        print(f"{name:<18}{t_ref * 1e6:>12.1f}{t_comp * 1e6:>15.1f}{t_ref / t_comp:>9.2f}")


def bench_training_iteration(repeats):
    from dnclab import core, regularization, tasks, training
    from dnclab.core import DncConfig, DncVariant
    from dnclab.memory import MemoryConfig

    dnc = DncConfig.build(
        DncVariant.COMPR_REG, input_size=2, output_size=2,
        mem=MemoryConfig(num_slots=20, slot_width=8, num_read_heads=2),
        hidden_size=64,
    )
    params = core.init_params(dnc, 0)
    batch = tasks.generate_batch(tasks.TaskKind.COPY, 6, 64, np.random.default_rng(1))

    def step():
        outputs, traces = core.unroll(batch.inputs, params, dnc)
        task_l = training.batch_task_losses(outputs, batch)
        states = core.carried_cell_states(traces, dnc)
        state_l = regularization.state_loss_batched(states, dnc.reg.top_k)
        loss = regularization.combined_loss(task_l, state_l, dnc.reg.alpha)
        params.zero_grads()
        loss.backward()

    t = timeit(step, max(3, repeats // 10))
    print(f"\nfull train iteration (COPY, B=64, T=14, {kernels.BACKEND} kernels): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    if comp is None:
        print("compiled backend unavailable; showing numpy only")
    bench_kernels(args.repeats)
    bench_training_iteration(args.repeats)
