"""Controller network variants: LSTM, Peephole LSTM (optionally with cell-state
compression), and a stateless feedforward baseline.

Step functions are pure: they take the previous ``ControllerState`` and return
the new one alongside the hidden output.  Gate weights act on the concatenated
input, stored as single (H, input+H) blocks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError


class Variant(enum.Enum):
    LSTM = "lstm"
    PEEPHOLE = "peephole"
    PEEPHOLE_COMPRESSED = "peephole_compressed"
    FFNN = "ffnn"


@dataclass(frozen=True)
class ControllerConfig:
    variant: Variant
    hidden_size: int = 128
    ffnn_layers: int = 3
    input_size: int = 0  # X + R*W, set by the enclosing network config

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ConfigError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if self.ffnn_layers < 1:
            raise ConfigError(f"ffnn_layers must be >= 1, got {self.ffnn_layers}")
        if self.input_size < 1:
            raise ConfigError(f"input_size must be >= 1, got {self.input_size}")

    @property
    def is_recurrent(self):
        return self.variant is not Variant.FFNN

    @property
    def compress(self):
        return self.variant is Variant.PEEPHOLE_COMPRESSED


@dataclass
class ControllerParams:
    """Gate blocks and biases for the recurrent variants, layer stacks for the
    feedforward one, plus the trained initial states."""

    w_i: Tensor | None = None  # (H, input+H)
    w_f: Tensor | None = None
    w_o: Tensor | None = None
    w_c: Tensor | None = None
    b_i: Tensor | None = None  # (H,)
    b_f: Tensor | None = None
    b_o: Tensor | None = None
    b_c: Tensor | None = None
    h0: Tensor | None = None  # (H,)
    c0: Tensor | None = None
    ffnn_w: list[Tensor] = field(default_factory=list)
    ffnn_b: list[Tensor] = field(default_factory=list)

    def named_tensors(self):
        for name in ("w_i", "w_f", "w_o", "w_c", "b_i", "b_f", "b_o", "b_c", "h0", "c0"):
            t = getattr(self, name)
            if t is not None:
                yield name, t
        for i, (w, b) in enumerate(zip(self.ffnn_w, self.ffnn_b)):
            yield f"ffnn_w{i}", w
            yield f"ffnn_b{i}", b

    @classmethod
    def zeros(cls, cfg: ControllerConfig) -> "ControllerParams":
        h, x = cfg.hidden_size, cfg.input_size
        if cfg.variant is Variant.FFNN:
            widths = [x] + [h] * cfg.ffnn_layers
            return cls(
                ffnn_w=[Tensor(np.zeros((widths[i + 1], widths[i]))) for i in range(cfg.ffnn_layers)],
                ffnn_b=[Tensor(np.zeros(h)) for _ in range(cfg.ffnn_layers)],
            )
        z = lambda *s: Tensor(np.zeros(s))
        return cls(
            w_i=z(h, x + h), w_f=z(h, x + h), w_o=z(h, x + h), w_c=z(h, x + h),
            b_i=z(h), b_f=z(h), b_o=z(h), b_c=z(h), h0=z(h), c0=z(h),
        )


@dataclass
class ControllerState:
    h: Tensor  # (B, H) hidden output of the last step
    c: Tensor  # (B, H) carried cell state (compressed value when compressing)
    c_raw: Tensor  # (B, H) pre-compression cell state, equal to c otherwise

    @classmethod
    def initial(cls, params: ControllerParams, cfg: ControllerConfig, batch: int) -> "ControllerState":
        h = cfg.hidden_size
        if cfg.is_recurrent:
            ones = Tensor(np.ones((batch, 1)))
            h0 = ones * ad.reshape(params.h0, (1, h))
            c0 = ones * ad.reshape(params.c0, (1, h))
            return cls(h=h0, c=c0, c_raw=c0)
        z = Tensor(np.zeros((batch, h)))
        return cls(h=z, c=z, c_raw=z)


def _check_input(chi, params):
    gate_in = params.w_i.shape[1]
    hidden = params.b_i.shape[0]
    if chi.shape[-1] != gate_in - hidden:
        raise ConfigError(
            f"controller input has width {chi.shape[-1]}, expected {gate_in - hidden}"
        )


def _as_rows(x):
    x = ad.as_tensor(x)
    if x.ndim == 1:
        return ad.reshape(x, (1, -1)), True
    return x, False


def lstm_step(chi, state_prev: ControllerState, params: ControllerParams):
    """Vanilla LSTM step; the recurrent input is the previous hidden state."""
    chi, squeeze = _as_rows(chi)
    _check_input(chi, params)
    h_prev, _ = _as_rows(state_prev.h)
    c_prev, _ = _as_rows(state_prev.c)
    z = ad.concat([chi, h_prev], axis=1)
    i = ad.sigmoid(ad.linear(z, params.w_i, params.b_i))
    f = ad.sigmoid(ad.linear(z, params.w_f, params.b_f))
    o = ad.sigmoid(ad.linear(z, params.w_o, params.b_o))
    c = f * c_prev + i * ad.tanh(ad.linear(z, params.w_c, params.b_c))
    h = o * ad.tanh(c)
    if squeeze:
        h, c = ad.reshape(h, (-1,)), ad.reshape(c, (-1,))
    return h, ControllerState(h=h, c=c, c_raw=c)


def peephole_step(chi, state_prev: ControllerState, params: ControllerParams, compress: bool):
    """Peephole step: gates see the previous cell state, and only the cell
    state is carried over time.  With ``compress`` the carried value is
    squashed through tanh so it stays inside (-1, 1)."""
    chi, squeeze = _as_rows(chi)
    _check_input(chi, params)
    c_prev, _ = _as_rows(state_prev.c)
    z = ad.concat([chi, c_prev], axis=1)
    i = ad.sigmoid(ad.linear(z, params.w_i, params.b_i))
    f = ad.sigmoid(ad.linear(z, params.w_f, params.b_f))
    o = ad.sigmoid(ad.linear(z, params.w_o, params.b_o))
    c_raw = f * c_prev + i * ad.tanh(ad.linear(z, params.w_c, params.b_c))
    c = ad.tanh(c_raw) if compress else c_raw
    h = o * ad.tanh(c_raw)
    if squeeze:
        h, c, c_raw = (ad.reshape(t, (-1,)) for t in (h, c, c_raw))
    return h, ControllerState(h=h, c=c, c_raw=c_raw)


def ffnn_forward(chi, params: ControllerParams):
    """Stateless feedforward network; tanh on every layer except the last."""
    chi, squeeze = _as_rows(chi)
    if chi.shape[-1] != params.ffnn_w[0].shape[1]:
        raise ConfigError(
            f"controller input has width {chi.shape[-1]}, expected {params.ffnn_w[0].shape[1]}"
        )
    h = chi
    last = len(params.ffnn_w) - 1
    for i, (w, b) in enumerate(zip(params.ffnn_w, params.ffnn_b)):
        h = ad.linear(h, w, b)
        if i < last:
            h = ad.tanh(h)
    if squeeze:
        h = ad.reshape(h, (-1,))
    return h


def controller_step(chi, state_prev: ControllerState, params: ControllerParams, cfg: ControllerConfig):
    """Dispatch on the configured variant; FFNN keeps a dummy zero state."""
    if cfg.variant is Variant.LSTM:
        return lstm_step(chi, state_prev, params)
    if cfg.variant in (Variant.PEEPHOLE, Variant.PEEPHOLE_COMPRESSED):
        return peephole_step(chi, state_prev, params, cfg.compress)
    h = ffnn_forward(chi, params)
    zero = Tensor(np.zeros(h.shape))
    return h, ControllerState(h=h, c=zero, c_raw=zero)
