"""Cosine state-regularization loss and the combined training loss.

The regularizer pushes each sample's closest cell-state pairs even closer:
1 minus the mean of the K largest pairwise cosine similarities over the
sample's trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError

COS_EPS = 1e-8  # added to the norm product
DEGENERATE_NORM = 1e-8  # vectors below this count as zero -> similarity 0


@dataclass(frozen=True)
class RegConfig:
    alpha: float = 0.9
    top_k: int = 5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0,1], got {self.alpha}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")


def cosine_similarity(a, b):
    """<a,b> / (|a||b| + eps); exactly 0 when either norm is below 1e-8."""
    a, b = ad.as_tensor(a), ad.as_tensor(b)
    if a.shape != b.shape:
        raise ConfigError(f"cosine_similarity shapes differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a.data))
    nb = float(np.linalg.norm(b.data))
    if na < DEGENERATE_NORM or nb < DEGENERATE_NORM:
        return Tensor(0.0)
    dot = ad.tsum(a * b)
    denom = ad.sqrt(ad.tsum(ad.square(a))) * ad.sqrt(ad.tsum(ad.square(b))) + COS_EPS
    return dot / denom


def pairwise_cosines(states):
    """All pairwise similarities of a (B,T,H) trajectory batch -> (B,T,T)."""
    states = ad.as_tensor(states)
    gram = ad.matmul(states, ad.transpose_last2(states))
    norms = ad.sqrt(ad.tsum(ad.square(states), axis=2, keepdims=True))  # (B,T,1)
    denom = ad.matmul(norms, ad.transpose_last2(norms)) + COS_EPS
    sims = gram / denom
    ok = (np.linalg.norm(states.data, axis=2) >= DEGENERATE_NORM).astype(float)
    mask = ok[:, :, None] * ok[:, None, :]  # zero out (and cut gradients at) degenerate rows
    return sims * Tensor(mask)


def state_loss_batched(states, top_k: int):
    """Per-sample regularization loss for a (B,T,H) batch -> (B,) tensor.

    Pairs are unordered distinct time indices; ties in the top-K selection
    break by lower pair index.  When T(T-1)/2 < K all pairs are used.
    """
    states = ad.as_tensor(states)
    t = states.shape[1]
    if t < 2:
        raise ConfigError(f"state regularization needs >= 2 states, got {t}")
    sims = pairwise_cosines(states)
    iu, ju = np.triu_indices(t, k=1)
    vals = sims.data[:, iu, ju]  # (B, P)
    k = min(top_k, len(iu))
    sel = np.argsort(-vals, axis=1, kind="stable")[:, :k]
    picked = ad.gather_pairs(sims, iu[sel], ju[sel])  # (B, k)
    return 1.0 - ad.tmean(picked, axis=1)


def state_regularization_loss(states, top_k: int):
    """Loss for one sample's trajectory: a (T,H) tensor or list of T vectors."""
    if isinstance(states, (list, tuple)):
        states = ad.stack([ad.as_tensor(s) for s in states], axis=0)
    states = ad.as_tensor(states)
    batched = ad.reshape(states, (1,) + states.shape)
    return ad.reshape(state_loss_batched(batched, top_k), ())


def combined_loss(task_losses, state_losses, alpha: float):
    """Batch mean of alpha * task + (1 - alpha) * state, per sample."""
    task = _as_vector(task_losses)
    state = _as_vector(state_losses)
    if task.shape != state.shape:
        raise ConfigError(
            f"loss batches differ in length: {task.shape} vs {state.shape}"
        )
    return ad.tmean(alpha * task + (1.0 - alpha) * state)


def _as_vector(losses):
    if isinstance(losses, (list, tuple)):
        losses = ad.stack([ad.reshape(ad.as_tensor(l), ()) for l in losses], axis=0)
    losses = ad.as_tensor(losses)
    if losses.ndim == 0:
        losses = ad.reshape(losses, (1,))
    return losses
