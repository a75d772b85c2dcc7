"""Pure-numpy implementations of the hot step kernels.

Every function here has a compiled twin in ``_ckernels.pyx``; the pair is the
contract checked by the backend parity tests.  All arrays are float64 and
C-contiguous, batch dimension first.
"""

import numpy as np

EPS_NORM = 1e-8  # added to each norm in the slot cosine
DEGENERATE_NORM = 1e-8  # below this a vector counts as zero -> similarity 0


def sigmoid_fwd(x):
    t = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))


def sigmoid_bwd(y, gy):
    return gy * y * (1.0 - y)


def tanh_fwd(x):
    return np.tanh(x)


def tanh_bwd(y, gy):
    return gy * (1.0 - y * y)


def oneplus_fwd(x):
    # 1 + softplus(x), computed without overflow
    return 1.0 + np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def oneplus_bwd(x, gy):
    return gy * sigmoid_fwd(x)


def softmax_fwd(x):
    """Row softmax of a 2-D array."""
    shifted = x - x.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def softmax_bwd(y, gy):
    dot = (gy * y).sum(axis=1, keepdims=True)
    return y * (gy - dot)


def cosine_slots_fwd(mem, key):
    """Cosine similarity between a key (B,W) and every memory row (B,N,W).

    Norms get EPS_NORM added before the product; rows or keys with norm below
    DEGENERATE_NORM yield similarity exactly 0.  Returns (cos, row_norms,
    key_norms) with the norms cached for the backward pass.
    """
    mn = np.sqrt((mem * mem).sum(axis=2))  # (B,N)
    kn = np.sqrt((key * key).sum(axis=1))  # (B,)
    dot = np.einsum("bnw,bw->bn", mem, key)
    cos = dot / ((mn + EPS_NORM) * (kn + EPS_NORM)[:, None])
    cos[mn < DEGENERATE_NORM] = 0.0
    cos[kn < DEGENERATE_NORM, :] = 0.0
    return cos, mn, kn


def cosine_slots_bwd(mem, key, cos, mn, kn, g):
    g = g.copy()
    g[mn < DEGENERATE_NORM] = 0.0
    g[kn < DEGENERATE_NORM, :] = 0.0
    denom = (mn + EPS_NORM) * (kn + EPS_NORM)[:, None]  # (B,N)
    mn_safe = np.maximum(mn, DEGENERATE_NORM)
    kn_safe = np.maximum(kn, DEGENERATE_NORM)
    g_over_d = g / denom
    gmem = g_over_d[:, :, None] * key[:, None, :]
    gmem -= (g * cos / (mn_safe * (mn + EPS_NORM)))[:, :, None] * mem
    gkey = np.einsum("bn,bnw->bw", g_over_d, mem)
    gkey -= ((g * cos).sum(axis=1) / (kn_safe * (kn + EPS_NORM)))[:, None] * key
    return gmem, gkey


def allocation_fwd(u):
    """Free-slot allocation weighting from usage (B,N).

    Slots sorted by usage ascending, ties to the lower index; the sort order
    is a routing decision and carries no gradient.
    """
    order = np.argsort(u, axis=1, kind="stable")
    su = np.take_along_axis(u, order, axis=1)
    cp = np.ones_like(su)
    np.cumprod(su[:, :-1], axis=1, out=cp[:, 1:])
    a_sorted = (1.0 - su) * cp
    a = np.empty_like(u)
    np.put_along_axis(a, order, a_sorted, axis=1)
    return a, order


def allocation_bwd(u, order, ga):
    su = np.take_along_axis(u, order, axis=1)
    cp = np.ones_like(su)
    np.cumprod(su[:, :-1], axis=1, out=cp[:, 1:])
    ga_sorted = np.take_along_axis(ga, order, axis=1)
    q = ga_sorted * (1.0 - su)
    # r[j] = sum_{i>j} q[i] * prod_{j<m<i} su[m], built right to left so the
    # product over earlier slots never needs a division
    n = u.shape[1]
    r = np.zeros_like(su)
    for j in range(n - 2, -1, -1):
        r[:, j] = q[:, j + 1] + su[:, j + 1] * r[:, j + 1]
    dsu = cp * (r - ga_sorted)
    gu = np.empty_like(u)
    np.put_along_axis(gu, order, dsu, axis=1)
    return gu


def link_fwd(link, prec, ww):
    """Temporal link update: (B,N,N), precedence (B,N), write weighting (B,N)."""
    wi = ww[:, :, None]
    wj = ww[:, None, :]
    out = (1.0 - wi - wj) * link + wi * prec[:, None, :]
    n = link.shape[1]
    idx = np.arange(n)
    out[:, idx, idx] = 0.0
    return out


def link_bwd(link, prec, ww, g):
    n = link.shape[1]
    idx = np.arange(n)
    g = g.copy()
    g[:, idx, idx] = 0.0
    wi = ww[:, :, None]
    wj = ww[:, None, :]
    glink = (1.0 - wi - wj) * g
    gprec = np.einsum("bij,bi->bj", g, ww)
    gl = g * link
    gww = np.einsum("bij,bj->bi", g, prec) - gl.sum(axis=2) - gl.sum(axis=1)
    return glink, gprec, gww


def erase_write_fwd(mem, ww, erase, write):
    """Erase-then-add memory update: M * (1 - w e^T) + w v^T."""
    w = ww[:, :, None]
    return mem * (1.0 - w * erase[:, None, :]) + w * write[:, None, :]


def erase_write_bwd(mem, ww, erase, write, g):
    w = ww[:, :, None]
    gmem = g * (1.0 - w * erase[:, None, :])
    gww = ((write[:, None, :] - mem * erase[:, None, :]) * g).sum(axis=2)
    gerase = -(g * mem * w).sum(axis=1)
    gwrite = (g * w).sum(axis=1)
    return gmem, gww, gerase, gwrite
