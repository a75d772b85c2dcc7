"""External memory matrix and the read/write addressing mechanics.

All operations are pure functions on ``autodiff.Tensor`` values and work on a
leading batch dimension.  Unbatched inputs (the shapes used by the formulas)
are accepted too and return unbatched results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError


@dataclass(frozen=True)
class MemoryConfig:
    num_slots: int = 50
    slot_width: int = 16
    num_read_heads: int = 4

    def __post_init__(self):
        if self.num_slots < 1 or self.slot_width < 1 or self.num_read_heads < 1:
            raise ConfigError(
                f"memory dimensions must be >= 1, got N={self.num_slots}, "
                f"W={self.slot_width}, R={self.num_read_heads}"
            )

    @property
    def interface_size(self):
        w, r = self.slot_width, self.num_read_heads
        return w * r + 3 * w + 5 * r + 3


@dataclass
class MemoryState:
    mem: Tensor  # (B, N, W)
    usage: Tensor  # (B, N)
    link: Tensor  # (B, N, N)
    precedence: Tensor  # (B, N)
    write_weighting: Tensor  # (B, N)
    read_weightings: Tensor  # (B, R, N)
    read_vectors: Tensor  # (B, R, W)

    @classmethod
    def zeros(cls, cfg: MemoryConfig, batch: int) -> "MemoryState":
        n, w, r = cfg.num_slots, cfg.slot_width, cfg.num_read_heads
        z = lambda *shape: Tensor(np.zeros(shape))
        return cls(
            mem=z(batch, n, w),
            usage=z(batch, n),
            link=z(batch, n, n),
            precedence=z(batch, n),
            write_weighting=z(batch, n),
            read_weightings=z(batch, r, n),
            read_vectors=z(batch, r, w),
        )


@dataclass
class InterfaceFields:
    read_keys: Tensor  # (B, R, W)
    read_strengths: Tensor  # (B, R), >= 1
    write_key: Tensor  # (B, W)
    write_strength: Tensor  # (B, 1), >= 1
    erase: Tensor  # (B, W), in [0, 1]
    write_vec: Tensor  # (B, W)
    free_gates: Tensor  # (B, R), in [0, 1]
    alloc_gate: Tensor  # (B, 1), in [0, 1]
    write_gate: Tensor  # (B, 1), in [0, 1]
    read_modes: Tensor  # (B, R, 3) rows summing to 1, order (backward, content, forward)


def parse_interface(xi, cfg: MemoryConfig) -> InterfaceFields:
    """Split the raw interface vector and apply the field activations.

    Layout (frozen): R read keys, R read strengths, write key, write
    strength, erase, write vector, R free gates, allocation gate, write gate,
    R read-mode triples.
    """
    xi = ad.as_tensor(xi)
    squeeze = xi.ndim == 1
    if squeeze:
        xi = ad.reshape(xi, (1, -1))
    w, r = cfg.slot_width, cfg.num_read_heads
    expected = cfg.interface_size
    if xi.shape[1] != expected:
        raise ConfigError(
            f"interface vector has length {xi.shape[1]}, expected "
            f"{expected} (= W*R+3W+5R+3 for W={w}, R={r})"
        )
    batch = xi.shape[0]

    pos = 0

    def take(n):
        nonlocal pos
        out = ad.narrow(xi, 1, pos, n)
        pos += n
        return out

    fields = InterfaceFields(
        read_keys=ad.reshape(take(r * w), (batch, r, w)),
        read_strengths=ad.oneplus(take(r)),
        write_key=take(w),
        write_strength=ad.oneplus(take(1)),
        erase=ad.sigmoid(take(w)),
        write_vec=take(w),
        free_gates=ad.sigmoid(take(r)),
        alloc_gate=ad.sigmoid(take(1)),
        write_gate=ad.sigmoid(take(1)),
        read_modes=ad.softmax_last(ad.reshape(take(3 * r), (batch, r, 3))),
    )
    if squeeze:
        fields = InterfaceFields(
            **{
                name: ad.reshape(t, t.shape[1:])
                for name, t in vars(fields).items()
            }
        )
    return fields


def _batched(x, ndim):
    x = ad.as_tensor(x)
    if x.ndim == ndim - 1:
        return ad.reshape(x, (1,) + x.shape), True
    return x, False


def _debatch(x, squeeze):
    return ad.reshape(x, x.shape[1:]) if squeeze else x


def content_weighting(mem, key, strength):
    """Softmax over slots of strength-scaled cosine similarity to the key."""
    mem, squeeze = _batched(mem, 3)
    key, _ = _batched(key, 2)
    strength = ad.as_tensor(strength)
    if strength.ndim == 0:
        strength = ad.reshape(strength, (1, 1))
    elif strength.ndim == 1:
        strength = ad.reshape(strength, (-1, 1))
    cos = ad.cosine_slots(mem, key)
    return _debatch(ad.softmax_last(cos * strength), squeeze)


def update_usage(u_prev, ww_prev, wr_prev, free_gates):
    """Usage after freeing read slots and committing the previous write.

    ``wr_prev`` is (B,R,N) (or (R,N)); ``free_gates`` is (B,R) (or (R,)).
    """
    u_prev, squeeze = _batched(u_prev, 2)
    ww_prev, _ = _batched(ww_prev, 2)
    wr_prev, _ = _batched(wr_prev, 3)
    free_gates, _ = _batched(free_gates, 2)
    r = wr_prev.shape[1]
    psi = None
    for i in range(r):
        head = ad.reshape(ad.narrow(wr_prev, 1, i, 1), u_prev.shape)
        gate = ad.narrow(free_gates, 1, i, 1)
        factor = 1.0 - gate * head
        psi = factor if psi is None else psi * factor
    u = (u_prev + ww_prev - u_prev * ww_prev) * psi
    return _debatch(u, squeeze)


def allocation_weighting(usage):
    """Weighting that favours the least-used slots (ties to the lower index)."""
    usage, squeeze = _batched(usage, 2)
    return _debatch(ad.allocation(usage), squeeze)


def write_weighting(content_w, alloc_w, alloc_gate, write_gate):
    content_w, squeeze = _batched(content_w, 2)
    alloc_w, _ = _batched(alloc_w, 2)
    alloc_gate = _gate(alloc_gate)
    write_gate = _gate(write_gate)
    ww = write_gate * (alloc_gate * alloc_w + (1.0 - alloc_gate) * content_w)
    return _debatch(ww, squeeze)


def _gate(g):
    g = ad.as_tensor(g)
    if g.ndim == 0:
        return ad.reshape(g, (1, 1))
    if g.ndim == 1:
        return ad.reshape(g, (-1, 1))
    return g


def write_memory(mem_prev, ww, erase, write_vec):
    """Erase-then-add update of the memory matrix."""
    mem_prev, squeeze = _batched(mem_prev, 3)
    ww, _ = _batched(ww, 2)
    erase, _ = _batched(erase, 2)
    write_vec, _ = _batched(write_vec, 2)
    return _debatch(ad.erase_write(mem_prev, ww, erase, write_vec), squeeze)


def update_temporal_link(link_prev, prec_prev, ww):
    """Returns the new link matrix and precedence weighting."""
    link_prev, squeeze = _batched(link_prev, 3)
    prec_prev, _ = _batched(prec_prev, 2)
    ww, _ = _batched(ww, 2)
    link = ad.link_update(link_prev, prec_prev, ww)
    prec = (1.0 - ad.tsum(ww, axis=1, keepdims=True)) * prec_prev + ww
    return _debatch(link, squeeze), _debatch(prec, squeeze)


def read_weightings(link, wr_prev, content_w, read_modes):
    """Mix backward / content / forward addressing per head.

    ``wr_prev`` and ``content_w`` are (B,R,N), ``read_modes`` is (B,R,3) with
    the content component in the middle slot.
    """
    link, squeeze = _batched(link, 3)
    wr_prev, _ = _batched(wr_prev, 3)
    content_w, _ = _batched(content_w, 3)
    read_modes, _ = _batched(read_modes, 3)
    fwd = ad.matmul(wr_prev, ad.transpose_last2(link))  # rows: L @ w
    bwd = ad.matmul(wr_prev, link)  # rows: L^T @ w
    pi_b = ad.narrow(read_modes, 2, 0, 1)
    pi_c = ad.narrow(read_modes, 2, 1, 1)
    pi_f = ad.narrow(read_modes, 2, 2, 1)
    wr = pi_b * bwd + pi_c * content_w + pi_f * fwd
    return _debatch(wr, squeeze)


def read_memory(mem, wr):
    """Read vectors for one head (B,N) or all heads (B,R,N)."""
    mem = ad.as_tensor(mem)
    wr = ad.as_tensor(wr)
    if mem.ndim == 2 and wr.ndim == 1:
        return ad.reshape(
            ad.matmul(ad.reshape(wr, (1, -1)), mem), (mem.shape[1],)
        )
    mem, _ = _batched(mem, 3)
    if wr.ndim == 2 and wr.shape[0] == mem.shape[0]:
        return ad.reshape(
            ad.matmul(ad.reshape(wr, (wr.shape[0], 1, -1)), mem),
            (wr.shape[0], mem.shape[1]),
        )
    wr, _ = _batched(wr, 3)
    return ad.matmul(wr, mem)  # (B,R,N) @ (B,N,W) -> (B,R,W)


def validate_state(state: MemoryState, tol: float = 1e-9) -> None:
    """Raise AssertionError when a reachable-state invariant is violated."""
    ww = state.write_weighting.data
    wr = state.read_weightings.data
    u = state.usage.data
    link = state.link.data
    assert (ww >= 0).all() and (wr >= 0).all(), "negative weighting entry"
    assert ww.sum(axis=-1).max() <= 1 + tol, "write weighting sum > 1"
    assert wr.sum(axis=-1).max() <= 1 + tol, "read weighting sum > 1"
    assert (u >= 0).all() and (u <= 1 + tol).all(), "usage out of [0,1]"
    n = link.shape[-1]
    idx = np.arange(n)
    assert (link[..., idx, idx] == 0).all(), "link diagonal not zero"
    assert (link >= 0).all(), "negative link entry"
    assert link.sum(axis=-1).max() <= 1 + tol, "link row sum > 1"
    assert link.sum(axis=-2).max() <= 1 + tol, "link column sum > 1"
