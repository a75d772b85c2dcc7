# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``reference.py``: fused loops over the
same batched float64 layouts."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, sqrt

cnp.import_array()

EPS_NORM = 1e-8
DEGENERATE_NORM = 1e-8

cdef double _EPS = 1e-8
cdef double _DEG = 1e-8


cdef inline double _sigmoid(double x) nogil:
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    cdef double e = exp(x)
    return e / (1.0 + e)


def _flat(arr):
    return np.ascontiguousarray(arr, dtype=np.float64).ravel()


def sigmoid_fwd(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _sigmoid(xv[i])
    return out


def sigmoid_bwd(y, gy):
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[::1] yv = y.ravel()
    cdef double[::1] gv = _flat(gy)
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = yv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * yv[i] * (1.0 - yv[i])
    return out


def tanh_fwd(x):
    return np.tanh(np.ascontiguousarray(x, dtype=np.float64))


def tanh_bwd(y, gy):
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(y)
    cdef double[::1] yv = y.ravel()
    cdef double[::1] gv = _flat(gy)
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = yv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


def oneplus_fwd(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double v
    with nogil:
        for i in range(n):
            v = xv[i]
            ov[i] = 1.0 + (v if v > 0.0 else 0.0) + log1p(exp(-fabs(v)))
    return out


def oneplus_bwd(x, gy):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] gv = _flat(gy)
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * _sigmoid(xv[i])
    return out


def softmax_fwd(x):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((xv.shape[0], xv.shape[1]), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, rows = xv.shape[0], cols = xv.shape[1]
    cdef double mx, total
    with nogil:
        for i in range(rows):
            mx = xv[i, 0]
            for j in range(1, cols):
                if xv[i, j] > mx:
                    mx = xv[i, j]
            total = 0.0
            for j in range(cols):
                ov[i, j] = exp(xv[i, j] - mx)
                total += ov[i, j]
            for j in range(cols):
                ov[i, j] /= total
    return out


def softmax_bwd(y, gy):
    cdef double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] gv = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.empty((yv.shape[0], yv.shape[1]), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, rows = yv.shape[0], cols = yv.shape[1]
    cdef double dot
    with nogil:
        for i in range(rows):
            dot = 0.0
            for j in range(cols):
                dot += gv[i, j] * yv[i, j]
            for j in range(cols):
                ov[i, j] = yv[i, j] * (gv[i, j] - dot)
    return out


def cosine_slots_fwd(mem, key):
    cdef double[:, :, ::1] mv = np.ascontiguousarray(mem, dtype=np.float64)
    cdef double[:, ::1] kv = np.ascontiguousarray(key, dtype=np.float64)
    cdef Py_ssize_t b, i, j
    cdef Py_ssize_t bs = mv.shape[0], n = mv.shape[1], w = mv.shape[2]
    cos = np.empty((bs, n), dtype=np.float64)
    mn = np.empty((bs, n), dtype=np.float64)
    kn = np.empty(bs, dtype=np.float64)
    cdef double[:, ::1] cv = cos
    cdef double[:, ::1] mnv = mn
    cdef double[::1] knv = kn
    cdef double acc, dot
    with nogil:
        for b in range(bs):
            acc = 0.0
            for j in range(w):
                acc += kv[b, j] * kv[b, j]
            knv[b] = sqrt(acc)
            for i in range(n):
                acc = 0.0
                dot = 0.0
                for j in range(w):
                    acc += mv[b, i, j] * mv[b, i, j]
                    dot += mv[b, i, j] * kv[b, j]
                mnv[b, i] = sqrt(acc)
                if mnv[b, i] < _DEG or knv[b] < _DEG:
                    cv[b, i] = 0.0
                else:
                    cv[b, i] = dot / ((mnv[b, i] + _EPS) * (knv[b] + _EPS))
    return cos, mn, kn


def cosine_slots_bwd(mem, key, cos, mn, kn, g):
    cdef double[:, :, ::1] mv = np.ascontiguousarray(mem, dtype=np.float64)
    cdef double[:, ::1] kv = np.ascontiguousarray(key, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(cos, dtype=np.float64)
    cdef double[:, ::1] mnv = np.ascontiguousarray(mn, dtype=np.float64)
    cdef double[::1] knv = np.ascontiguousarray(kn, dtype=np.float64)
    cdef double[:, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t b, i, j
    cdef Py_ssize_t bs = mv.shape[0], n = mv.shape[1], w = mv.shape[2]
    gmem = np.zeros((bs, n, w), dtype=np.float64)
    gkey = np.zeros((bs, w), dtype=np.float64)
    cdef double[:, :, ::1] gmv = gmem
    cdef double[:, ::1] gkv = gkey
    cdef double gi, denom, mscale, kscale
    with nogil:
        for b in range(bs):
            if knv[b] < _DEG:
                continue
            kscale = knv[b] * (knv[b] + _EPS)
            for i in range(n):
                if mnv[b, i] < _DEG:
                    continue
                gi = gv[b, i]
                if gi == 0.0:
                    continue
                denom = (mnv[b, i] + _EPS) * (knv[b] + _EPS)
                mscale = mnv[b, i] * (mnv[b, i] + _EPS)
                for j in range(w):
                    gmv[b, i, j] += gi * (kv[b, j] / denom - cv[b, i] * mv[b, i, j] / mscale)
                    gkv[b, j] += gi * (mv[b, i, j] / denom - cv[b, i] * kv[b, j] / kscale)
    return gmem, gkey


def allocation_fwd(u):
    u = np.ascontiguousarray(u, dtype=np.float64)
    order = np.argsort(u, axis=1, kind="stable")
    cdef double[:, ::1] uv = u
    cdef long[:, ::1] ov = np.ascontiguousarray(order, dtype=np.int64)
    a = np.empty_like(u)
    cdef double[:, ::1] av = a
    cdef Py_ssize_t b, j, bs = uv.shape[0], n = uv.shape[1]
    cdef double cp, val
    with nogil:
        for b in range(bs):
            cp = 1.0
            for j in range(n):
                val = uv[b, ov[b, j]]
                av[b, ov[b, j]] = (1.0 - val) * cp
                cp *= val
    return a, order


def allocation_bwd(u, order, ga):
    u = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, ::1] uv = u
    cdef long[:, ::1] ov = np.ascontiguousarray(order, dtype=np.int64)
    cdef double[:, ::1] gav = np.ascontiguousarray(ga, dtype=np.float64)
    gu = np.empty_like(u)
    cdef double[:, ::1] guv = gu
    cdef Py_ssize_t b, j, bs = uv.shape[0], n = uv.shape[1]
    # su/cp/q/r follow the sorted slot order per sample
    su_arr = np.empty(n, dtype=np.float64)
    cp_arr = np.empty(n, dtype=np.float64)
    q_arr = np.empty(n, dtype=np.float64)
    r_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] su = su_arr
    cdef double[::1] cp = cp_arr
    cdef double[::1] q = q_arr
    cdef double[::1] r = r_arr
    cdef double run, gs
    with nogil:
        for b in range(bs):
            run = 1.0
            for j in range(n):
                su[j] = uv[b, ov[b, j]]
                cp[j] = run
                run *= su[j]
                gs = gav[b, ov[b, j]]
                q[j] = gs * (1.0 - su[j])
            r[n - 1] = 0.0
            for j in range(n - 2, -1, -1):
                r[j] = q[j + 1] + su[j + 1] * r[j + 1]
            for j in range(n):
                gs = gav[b, ov[b, j]]
                guv[b, ov[b, j]] = cp[j] * (r[j] - gs)
    return gu


def link_fwd(link, prec, ww):
    cdef double[:, :, ::1] lv = np.ascontiguousarray(link, dtype=np.float64)
    cdef double[:, ::1] pv = np.ascontiguousarray(prec, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(ww, dtype=np.float64)
    cdef Py_ssize_t b, i, j, bs = lv.shape[0], n = lv.shape[1]
    out = np.empty((bs, n, n), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    with nogil:
        for b in range(bs):
            for i in range(n):
                for j in range(n):
                    if i == j:
                        ov[b, i, j] = 0.0
                    else:
                        ov[b, i, j] = (1.0 - wv[b, i] - wv[b, j]) * lv[b, i, j] + wv[b, i] * pv[b, j]
    return out


def link_bwd(link, prec, ww, g):
    cdef double[:, :, ::1] lv = np.ascontiguousarray(link, dtype=np.float64)
    cdef double[:, ::1] pv = np.ascontiguousarray(prec, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(ww, dtype=np.float64)
    cdef double[:, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t b, i, j, bs = lv.shape[0], n = lv.shape[1]
    glink = np.zeros((bs, n, n), dtype=np.float64)
    gprec = np.zeros((bs, n), dtype=np.float64)
    gww = np.zeros((bs, n), dtype=np.float64)
    cdef double[:, :, ::1] glv = glink
    cdef double[:, ::1] gpv = gprec
    cdef double[:, ::1] gwv = gww
    cdef double gij
    with nogil:
        for b in range(bs):
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    gij = gv[b, i, j]
                    if gij == 0.0:
                        continue
                    glv[b, i, j] = (1.0 - wv[b, i] - wv[b, j]) * gij
                    gpv[b, j] += gij * wv[b, i]
                    gwv[b, i] += gij * (pv[b, j] - lv[b, i, j])
                    gwv[b, j] -= gij * lv[b, i, j]
    return glink, gprec, gww


def erase_write_fwd(mem, ww, erase, write):
    cdef double[:, :, ::1] mv = np.ascontiguousarray(mem, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(ww, dtype=np.float64)
    cdef double[:, ::1] ev = np.ascontiguousarray(erase, dtype=np.float64)
    cdef double[:, ::1] vv = np.ascontiguousarray(write, dtype=np.float64)
    cdef Py_ssize_t b, i, j, bs = mv.shape[0], n = mv.shape[1], w = mv.shape[2]
    out = np.empty((bs, n, w), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    cdef double wi
    with nogil:
        for b in range(bs):
            for i in range(n):
                wi = wv[b, i]
                for j in range(w):
                    ov[b, i, j] = mv[b, i, j] * (1.0 - wi * ev[b, j]) + wi * vv[b, j]
    return out


def erase_write_bwd(mem, ww, erase, write, g):
    cdef double[:, :, ::1] mv = np.ascontiguousarray(mem, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(ww, dtype=np.float64)
    cdef double[:, ::1] ev = np.ascontiguousarray(erase, dtype=np.float64)
    cdef double[:, ::1] vv = np.ascontiguousarray(write, dtype=np.float64)
    cdef double[:, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t b, i, j, bs = mv.shape[0], n = mv.shape[1], w = mv.shape[2]
    gmem = np.empty((bs, n, w), dtype=np.float64)
    gww = np.zeros((bs, n), dtype=np.float64)
    gerase = np.zeros((bs, w), dtype=np.float64)
    gwrite = np.zeros((bs, w), dtype=np.float64)
    cdef double[:, :, ::1] gmv = gmem
    cdef double[:, ::1] gwv = gww
    cdef double[:, ::1] gev = gerase
    cdef double[:, ::1] gvv = gwrite
    cdef double wi, gij
    with nogil:
        for b in range(bs):
            for i in range(n):
                wi = wv[b, i]
                for j in range(w):
                    gij = gv[b, i, j]
                    gmv[b, i, j] = gij * (1.0 - wi * ev[b, j])
                    gwv[b, i] += gij * (vv[b, j] - mv[b, i, j] * ev[b, j])
                    gev[b, j] -= gij * mv[b, i, j] * wi
                    gvv[b, j] += gij * wi
    return gmem, gww, gerase, gwrite
