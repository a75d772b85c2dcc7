"""Full network assembly: controller + memory wired into a step and rollout,
output/readout/interface projections, initialization, and post-hoc memory
extension."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import controllers, memory
from .autodiff import Tensor
from .controllers import ControllerConfig, ControllerParams, ControllerState, Variant
from .errors import ConfigError
from .memory import InterfaceFields, MemoryConfig, MemoryState
from .regularization import RegConfig


class DncVariant(enum.Enum):
    STATEFUL_BASELINE = "STATEFUL-BASELINE"
    STATELESS_BASELINE = "STATELESS-BASELINE"
    COMPR = "COMPR"
    REG = "REG"
    COMPR_REG = "COMPR&REG"

    @property
    def tag(self):
        return self.value

    @property
    def controller_variant(self):
        return _VARIANT_MAP[self][0]

    @property
    def uses_reg(self):
        return _VARIANT_MAP[self][1]


_VARIANT_MAP = {
    DncVariant.STATEFUL_BASELINE: (Variant.LSTM, False),
    DncVariant.STATELESS_BASELINE: (Variant.FFNN, False),
    DncVariant.COMPR: (Variant.PEEPHOLE_COMPRESSED, False),
    DncVariant.REG: (Variant.PEEPHOLE, True),
    DncVariant.COMPR_REG: (Variant.PEEPHOLE_COMPRESSED, True),
}


@dataclass(frozen=True)
class DncConfig:
    memory: MemoryConfig
    controller: ControllerConfig
    input_size: int
    output_size: int
    reg: RegConfig
    variant: DncVariant

    def __post_init__(self):
        if self.input_size < 1 or self.output_size < 1:
            raise ConfigError("input_size and output_size must be >= 1")
        expected_in = self.input_size + self.memory.num_read_heads * self.memory.slot_width
        if self.controller.input_size != expected_in:
            raise ConfigError(
                f"controller input_size {self.controller.input_size} != X + R*W = {expected_in}"
            )
        if self.controller.variant is not self.variant.controller_variant:
            raise ConfigError(
                f"variant {self.variant.tag} requires controller "
                f"{self.variant.controller_variant}, got {self.controller.variant}"
            )

    @classmethod
    def build(
        cls,
        variant: DncVariant,
        input_size: int,
        output_size: int,
        mem: MemoryConfig | None = None,
        hidden_size: int = 128,
        ffnn_layers: int = 3,
        reg: RegConfig | None = None,
    ) -> "DncConfig":
        mem = mem or MemoryConfig()
        ctrl = ControllerConfig(
            variant=variant.controller_variant,
            hidden_size=hidden_size,
            ffnn_layers=ffnn_layers,
            input_size=input_size + mem.num_read_heads * mem.slot_width,
        )
        return cls(
            memory=mem,
            controller=ctrl,
            input_size=input_size,
            output_size=output_size,
            reg=reg or RegConfig(),
            variant=variant,
        )

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.tag,
            "input_size": self.input_size,
            "output_size": self.output_size,
            "memory": {
                "num_slots": self.memory.num_slots,
                "slot_width": self.memory.slot_width,
                "num_read_heads": self.memory.num_read_heads,
            },
            "hidden_size": self.controller.hidden_size,
            "ffnn_layers": self.controller.ffnn_layers,
            "reg": {"alpha": self.reg.alpha, "top_k": self.reg.top_k},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DncConfig":
        allowed = {
            "variant", "input_size", "output_size", "memory",
            "hidden_size", "ffnn_layers", "reg",
        }
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown keys in network config: {sorted(unknown)}")
        return cls.build(
            DncVariant(d["variant"]),
            input_size=int(d["input_size"]),
            output_size=int(d["output_size"]),
            mem=MemoryConfig(**d["memory"]),
            hidden_size=int(d["hidden_size"]),
            ffnn_layers=int(d["ffnn_layers"]),
            reg=RegConfig(**d["reg"]),
        )


@dataclass
class DncParams:
    controller: ControllerParams
    w_y: Tensor  # (Y, H)
    w_r: Tensor  # (Y, R*W)
    w_xi: Tensor  # (S, H)
    b_y: Tensor  # (Y,)
    b_xi: Tensor  # (S,)

    def named_tensors(self):
        for name, t in self.controller.named_tensors():
            yield f"controller.{name}", t
        for name in ("w_y", "w_r", "w_xi", "b_y", "b_xi"):
            yield name, getattr(self, name)

    def tensors(self):
        return [t for _, t in self.named_tensors()]

    def zero_grads(self):
        for t in self.tensors():
            t.grad = None


@dataclass
class DncState:
    memory: MemoryState
    controller: ControllerState


@dataclass
class StepTrace:
    y: Tensor  # (B, Y)
    xi_fields: InterfaceFields
    c_record: Tensor  # (B, H): pre-compression cell state where compression applies
    g_a: Tensor  # (B, 1) allocation gate
    pi_content: Tensor  # (B, R) content component of each head's read mode


def init_params(cfg: DncConfig, seed: int) -> DncParams:
    """LeCun-normal recurrent weights and projections, Glorot-uniform FFNN
    layers, zero biases, standard-normal initial states."""
    rng = np.random.default_rng(seed)
    ctrl_cfg = cfg.controller
    h, cin = ctrl_cfg.hidden_size, ctrl_cfg.input_size

    def lecun(rows, cols):
        return ad.parameter(rng.normal(0.0, 1.0 / np.sqrt(cols), size=(rows, cols)))

    def zeros(*shape):
        return ad.parameter(np.zeros(shape))

    if ctrl_cfg.variant is Variant.FFNN:
        widths = [cin] + [h] * ctrl_cfg.ffnn_layers
        ws, bs = [], []
        for i in range(ctrl_cfg.ffnn_layers):
            fan_in, fan_out = widths[i], widths[i + 1]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            ws.append(ad.parameter(rng.uniform(-limit, limit, size=(fan_out, fan_in))))
            bs.append(zeros(fan_out))
        ctrl = ControllerParams(ffnn_w=ws, ffnn_b=bs)
    else:
        gate_cols = cin + h
        ctrl = ControllerParams(
            w_i=lecun(h, gate_cols),
            w_f=lecun(h, gate_cols),
            w_o=lecun(h, gate_cols),
            w_c=lecun(h, gate_cols),
            b_i=zeros(h),
            b_f=zeros(h),
            b_o=zeros(h),
            b_c=zeros(h),
            h0=ad.parameter(rng.normal(0.0, 1.0, size=h)),
            c0=ad.parameter(rng.normal(0.0, 1.0, size=h)),
        )

    r, w = cfg.memory.num_read_heads, cfg.memory.slot_width
    s = cfg.memory.interface_size
    return DncParams(
        controller=ctrl,
        w_y=lecun(cfg.output_size, h),
        w_r=lecun(cfg.output_size, r * w),
        w_xi=lecun(s, h),
        b_y=zeros(cfg.output_size),
        b_xi=zeros(s),
    )


def initial_state(params: DncParams, cfg: DncConfig, batch: int) -> DncState:
    """Fresh episode start: zeroed memory, trained controller initial state."""
    return DncState(
        memory=MemoryState.zeros(cfg.memory, batch),
        controller=ControllerState.initial(params.controller, cfg.controller, batch),
    )


def dnc_step(x, state: DncState, params: DncParams, cfg: DncConfig):
    """One synchronous step: controller, interface emission, memory write then
    read, and the output built from the current read vectors."""
    x = ad.as_tensor(x)
    if x.ndim == 1:
        x = ad.reshape(x, (1, -1))
    if x.shape[1] != cfg.input_size:
        raise ConfigError(f"input has width {x.shape[1]}, expected {cfg.input_size}")
    batch = x.shape[0]
    mem_cfg = cfg.memory
    n, w, r = mem_cfg.num_slots, mem_cfg.slot_width, mem_cfg.num_read_heads
    ms = state.memory

    r_prev_flat = ad.reshape(ms.read_vectors, (batch, r * w))
    chi = ad.concat([x, r_prev_flat], axis=1)
    h, ctrl_state = controllers.controller_step(
        chi, state.controller, params.controller, cfg.controller
    )

    xi = ad.linear(h, params.w_xi, params.b_xi)
    fields = memory.parse_interface(xi, mem_cfg)

    usage = memory.update_usage(
        ms.usage, ms.write_weighting, ms.read_weightings, fields.free_gates
    )
    alloc = memory.allocation_weighting(usage)
    write_content = memory.content_weighting(ms.mem, fields.write_key, fields.write_strength)
    ww = memory.write_weighting(write_content, alloc, fields.alloc_gate, fields.write_gate)
    mem_new = memory.write_memory(ms.mem, ww, fields.erase, fields.write_vec)
    link, prec = memory.update_temporal_link(ms.link, ms.precedence, ww)

    read_content = ad.stack(
        [
            memory.content_weighting(
                mem_new,
                ad.reshape(ad.narrow(fields.read_keys, 1, i, 1), (batch, w)),
                ad.narrow(fields.read_strengths, 1, i, 1),
            )
            for i in range(r)
        ],
        axis=1,
    )
    wr = memory.read_weightings(link, ms.read_weightings, read_content, fields.read_modes)
    read_vectors = memory.read_memory(mem_new, wr)

    y = ad.linear(h, params.w_y, params.b_y) + ad.linear(
        ad.reshape(read_vectors, (batch, r * w)), params.w_r
    )

    if cfg.controller.variant is Variant.FFNN:
        c_record = ctrl_state.h
    elif cfg.controller.compress:
        c_record = ctrl_state.c_raw
    else:
        c_record = ctrl_state.c
    trace = StepTrace(
        y=y,
        xi_fields=fields,
        c_record=c_record,
        g_a=fields.alloc_gate,
        pi_content=ad.reshape(ad.narrow(fields.read_modes, 2, 1, 1), (batch, r)),
    )
    new_state = DncState(
        memory=MemoryState(
            mem=mem_new,
            usage=usage,
            link=link,
            precedence=prec,
            write_weighting=ww,
            read_weightings=wr,
            read_vectors=read_vectors,
        ),
        controller=ctrl_state,
    )
    return y, new_state, trace


def unroll(inputs, params: DncParams, cfg: DncConfig, return_final_state: bool = False):
    """Run a fresh episode over inputs (T,X) or (B,T,X).

    Returns (outputs, traces): outputs is (B,T,Y) (or (T,Y) for unbatched
    input) and traces align 1:1 with time steps.
    """
    arr = inputs.data if isinstance(inputs, Tensor) else np.asarray(inputs, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ConfigError(f"inputs must be (T,X) or (B,T,X), got shape {arr.shape}")
    batch, steps, _ = arr.shape
    if steps < 1:
        raise ConfigError("unroll needs at least one time step")

    state = initial_state(params, cfg, batch)
    ys, traces = [], []
    for t in range(steps):
        y, state, trace = dnc_step(Tensor(arr[:, t, :]), state, params, cfg)
        ys.append(y)
        traces.append(trace)
    outputs = ad.stack(ys, axis=1)
    if squeeze:
        outputs = ad.reshape(outputs, (steps, cfg.output_size))
    if return_final_state:
        return outputs, traces, state
    return outputs, traces


def carried_cell_states(traces, cfg: DncConfig):
    """Per-step carried cell states as one (B,T,H) tensor, for the state
    regularizer.  For compressing variants the carried value is tanh of the
    recorded pre-compression state; gradients are identical to tapping the
    recurrence directly."""
    recs = [tr.c_record for tr in traces]
    if cfg.controller.compress:
        recs = [ad.tanh(c) for c in recs]
    return ad.stack(recs, axis=1)


def extend_memory(params: DncParams, cfg: DncConfig, new_num_slots: int):
    """Swap in a larger zeroed memory post hoc; no parameter depends on N."""
    if new_num_slots < cfg.memory.num_slots:
        raise ConfigError(
            f"cannot shrink memory from {cfg.memory.num_slots} to {new_num_slots} slots"
        )
    new_mem = replace(cfg.memory, num_slots=new_num_slots)
    return params, replace(cfg, memory=new_mem)
