"""Reverse-mode automatic differentiation over numpy float64 arrays.

A ``Tensor`` wraps an ndarray and remembers how it was produced; calling
``backward()`` on a scalar walks the tape in reverse topological order and
accumulates gradients into every reachable tensor with ``requires_grad``.
Elementwise nonlinearities and the memory-addressing kernels dispatch to the
selected backend in ``dnclab.kernels``.
"""

from __future__ import annotations

import contextlib

import numpy as np

from . import kernels as K

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference / evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar; every implementation lives in the module functions below
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = _topo_order(self)
        self.grad = np.asarray(grad, dtype=np.float64)
        for node in order:
            gout = node.grad
            if gout is None or node._backward is None:
                continue
            for parent, g in zip(node._parents, node._backward(gout)):
                if g is None or not _needs_grad(parent):
                    continue
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad += g


def _needs_grad(t):
    return t.requires_grad or t._parents


def _topo_order(root):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and _needs_grad(p):
                stack.append((p, False))
    order.reverse()
    return order


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data):
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def _node(data, parents, backward):
    out = Tensor(data)
    if _grad_enabled and any(_needs_grad(p) for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    """Sum a gradient down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)),
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        ),
    )


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _node(np.matmul(a.data, b.data), (a, b), backward)


def linear(x, w, b=None):
    """x @ w.T (+ b) with w stored (out, in), the layout every weight uses."""
    x, w = as_tensor(x), as_tensor(w)
    y = x.data @ w.data.T
    if b is None:
        return _node(y, (x, w), lambda g: (g @ w.data, g.T @ x.data))
    b = as_tensor(b)
    return _node(
        y + b.data,
        (x, w, b),
        lambda g: (g @ w.data, g.T @ x.data, g.sum(axis=0)),
    )


def square(a):
    a = as_tensor(a)
    return _node(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def sqrt(a):
    a = as_tensor(a)
    y = np.sqrt(a.data)

    def backward(g):
        denom = np.maximum(y, 1e-300)
        return (0.5 * g / denom,)

    return _node(y, (a,), backward)


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, np.cumsum(sizes)[:-1], axis=axis))

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def narrow(a, axis, start, length):
    """Contiguous slice [start, start+length) along ``axis``."""
    a = as_tensor(a)
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)

    def backward(g):
        out = np.zeros_like(a.data)
        out[sl] = g
        return (out,)

    return _node(np.ascontiguousarray(a.data[sl]), (a,), backward)


def reshape(a, shape):
    a = as_tensor(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.data.shape),))


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]

    def backward(g):
        return tuple(np.ascontiguousarray(s) for s in np.moveaxis(g, axis, 0))

    return _node(np.stack([t.data for t in tensors], axis=axis), tensors, backward)


def transpose_last2(a):
    a = as_tensor(a)
    return _node(
        np.ascontiguousarray(np.swapaxes(a.data, -1, -2)),
        (a,),
        lambda g: (np.ascontiguousarray(np.swapaxes(g, -1, -2)),),
    )


def sigmoid(a):
    a = as_tensor(a)
    y = K.sigmoid_fwd(a.data)
    return _node(y, (a,), lambda g: (K.sigmoid_bwd(y, g),))


def tanh(a):
    a = as_tensor(a)
    y = K.tanh_fwd(a.data)
    return _node(y, (a,), lambda g: (K.tanh_bwd(y, g),))


def oneplus(a):
    a = as_tensor(a)
    return _node(K.oneplus_fwd(a.data), (a,), lambda g: (K.oneplus_bwd(a.data, g),))


def softmax_last(a):
    """Softmax over the last axis of any shape."""
    a = as_tensor(a)
    flat = a.data.reshape(-1, a.data.shape[-1])
    y = K.softmax_fwd(np.ascontiguousarray(flat))

    def backward(g):
        gflat = np.ascontiguousarray(g.reshape(-1, g.shape[-1]))
        return (K.softmax_bwd(y, gflat).reshape(a.data.shape),)

    return _node(y.reshape(a.data.shape), (a,), backward)


def bce_with_logits(logits, targets):
    """Elementwise binary cross-entropy on sigmoid(logits); targets constant."""
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    x = logits.data
    loss = np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))

    def backward(g):
        return (g * (K.sigmoid_fwd(x) - t),)

    return _node(loss, (logits,), backward)


def cosine_slots(mem, key):
    """Per-slot cosine similarity between key (B,W) and memory (B,N,W)."""
    mem, key = as_tensor(mem), as_tensor(key)
    cos, mn, kn = K.cosine_slots_fwd(mem.data, key.data)

    def backward(g):
        return K.cosine_slots_bwd(mem.data, key.data, cos, mn, kn, g)

    return _node(cos, (mem, key), backward)


def allocation(usage):
    """Allocation weighting from usage (B,N); sort order is not differentiated."""
    usage = as_tensor(usage)
    a, order = K.allocation_fwd(usage.data)
    return _node(a, (usage,), lambda g: (K.allocation_bwd(usage.data, order, g),))


def link_update(link, prec, ww):
    link, prec, ww = as_tensor(link), as_tensor(prec), as_tensor(ww)
    return _node(
        K.link_fwd(link.data, prec.data, ww.data),
        (link, prec, ww),
        lambda g: K.link_bwd(link.data, prec.data, ww.data, g),
    )


def erase_write(mem, ww, erase, write):
    mem, ww, erase, write = map(as_tensor, (mem, ww, erase, write))
    return _node(
        K.erase_write_fwd(mem.data, ww.data, erase.data, write.data),
        (mem, ww, erase, write),
        lambda g: K.erase_write_bwd(mem.data, ww.data, erase.data, write.data, g),
    )


def gather_pairs(sims, rows, cols):
    """Pick sims[b, rows[b,k], cols[b,k]] -> (B,K); indices are constants."""
    sims = as_tensor(sims)
    b_idx = np.arange(sims.data.shape[0])[:, None]

    def backward(g):
        out = np.zeros_like(sims.data)
        np.add.at(out, (b_idx, rows, cols), g)
        return (out,)

    return _node(sims.data[b_idx, rows, cols], (sims,), backward)
