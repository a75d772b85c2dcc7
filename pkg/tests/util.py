"""Shared test helpers: independent finite-difference oracle and gradient
comparison utilities."""

import numpy as np


def finite_difference(f, arrays, step=1e-5):
    """Central finite differences of the scalar ``f(*arrays)`` with respect to
    every entry of every array.  Arrays are perturbed in place and restored."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = f(*arrays)
            flat[i] = orig - step
            fm = f(*arrays)
            flat[i] = orig
            gf[i] = (fp - fm) / (2.0 * step)
        grads.append(g)
    return grads


def rel_errors(analytic, numeric, floor=1e-6):
    """Elementwise relative error with an absolute floor for tiny entries."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    scale = np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))
    return np.abs(analytic - numeric) / scale


def assert_grads_close(analytic, numeric, tol=1e-4, floor=1e-6):
    err = rel_errors(analytic, numeric, floor=floor)
    assert err.max() < tol, f"max relative gradient error {err.max():.3e} >= {tol}"
