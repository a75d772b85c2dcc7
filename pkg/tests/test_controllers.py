"""Controller variants: hand-computed step values, the compression bound,
statelessness of the feedforward baseline, and gradient checks."""

import numpy as np
import pytest

import dnclab.autodiff as ad
from dnclab import controllers
from dnclab.controllers import (
    ControllerConfig,
    ControllerParams,
    ControllerState,
    Variant,
)
from dnclab.errors import ConfigError
from util import assert_grads_close, finite_difference


def state_of(h, c, c_raw=None):
    t = lambda a: ad.Tensor(np.asarray(a, dtype=float))
    return ControllerState(h=t(h), c=t(c), c_raw=t(c_raw if c_raw is not None else c))


class TestLstmStep:
    def test_all_zero_params(self):
        cfg = ControllerConfig(Variant.LSTM, hidden_size=3, input_size=2)
        params = ControllerParams.zeros(cfg)
        h, state = controllers.lstm_step(np.ones(2), state_of(np.zeros(3), np.zeros(3)), params)
        assert np.allclose(h.data, 0.0)
        assert np.allclose(state.c.data, 0.0)

    def test_forget_gate_carries_memory(self):
        cfg = ControllerConfig(Variant.LSTM, hidden_size=2, input_size=1)
        params = ControllerParams.zeros(cfg)
        params.b_f.data[:] = 30.0  # saturate the forget gate
        c_prev = np.array([0.7, -1.3])
        _, state = controllers.lstm_step(np.zeros(1), state_of(np.zeros(2), c_prev), params)
        assert np.allclose(state.c.data, c_prev, atol=1e-9)

    def test_scalar_hand_value(self):
        cfg = ControllerConfig(Variant.LSTM, hidden_size=1, input_size=1)
        params = ControllerParams.zeros(cfg)
        params.w_c.data[0, 0] = 1.0  # input path only
        h, state = controllers.lstm_step(
            np.array([1.0]), state_of(np.zeros(1), np.zeros(1)), params
        )
        c_expected = 0.5 * np.tanh(1.0)
        assert np.isclose(state.c.data[0], c_expected)
        assert np.isclose(h.data[0], 0.5 * np.tanh(c_expected))

    def test_shape_mismatch(self):
        cfg = ControllerConfig(Variant.LSTM, hidden_size=2, input_size=3)
        params = ControllerParams.zeros(cfg)
        with pytest.raises(ConfigError):
            controllers.lstm_step(np.zeros(5), state_of(np.zeros(2), np.zeros(2)), params)


class TestPeepholeStep:
    def test_all_zero_params(self):
        cfg = ControllerConfig(Variant.PEEPHOLE, hidden_size=2, input_size=1)
        params = ControllerParams.zeros(cfg)
        for compress in (False, True):
            h, state = controllers.peephole_step(
                np.zeros(1), state_of(np.zeros(2), np.zeros(2)), params, compress
            )
            assert np.allclose(h.data, 0.0)
            assert np.allclose(state.c.data, 0.0)

    def test_compression_squashes(self):
        # force c_raw = 3 via saturated forget gate on c_prev = 3
        cfg = ControllerConfig(Variant.PEEPHOLE, hidden_size=1, input_size=1)
        params = ControllerParams.zeros(cfg)
        params.b_f.data[:] = 40.0
        _, state = controllers.peephole_step(
            np.zeros(1), state_of(np.zeros(1), np.array([3.0])), params, True
        )
        assert np.isclose(state.c_raw.data[0], 3.0, atol=1e-8)
        assert np.isclose(state.c.data[0], np.tanh(3.0))
        assert abs(state.c.data[0]) < 1.0

    def test_uncompressed_matches_lstm_with_swapped_recurrence(self):
        """peephole_step(compress=False) == lstm_step when the LSTM is fed the
        previous cell state as its recurrent input."""
        rng = np.random.default_rng(0)
        cfg = ControllerConfig(Variant.PEEPHOLE, hidden_size=4, input_size=3)
        params = ControllerParams.zeros(cfg)
        for name in ("w_i", "w_f", "w_o", "w_c"):
            getattr(params, name).data[:] = rng.normal(size=(4, 7))
        for name in ("b_i", "b_f", "b_o", "b_c"):
            getattr(params, name).data[:] = rng.normal(size=4)
        chi = rng.normal(size=3)
        c_prev = rng.normal(size=4)
        h_peep, s_peep = controllers.peephole_step(
            chi, state_of(rng.normal(size=4), c_prev), params, False
        )
        # oracle: vanilla equations with h_prev replaced by c_prev
        h_lstm, s_lstm = controllers.lstm_step(chi, state_of(c_prev, c_prev), params)
        assert np.allclose(h_peep.data, h_lstm.data)
        assert np.allclose(s_peep.c.data, s_lstm.c.data)

    def test_compressed_state_stays_bounded(self):
        rng = np.random.default_rng(1)
        cfg = ControllerConfig(Variant.PEEPHOLE_COMPRESSED, hidden_size=6, input_size=4)
        params = ControllerParams.zeros(cfg)
        for name in ("w_i", "w_f", "w_o", "w_c"):
            getattr(params, name).data[:] = rng.normal(size=(6, 10)) * 3.0
        state = state_of(np.zeros(6), rng.normal(size=6))
        state = ControllerState(h=state.h, c=ad.tanh(state.c), c_raw=state.c)
        with ad.no_grad():
            for _ in range(200):
                _, state = controllers.peephole_step(
                    rng.normal(size=4) * 5.0, state, params, True
                )
                assert (np.abs(state.c.data) < 1.0).all()


class TestFfnn:
    def test_zero_params(self):
        cfg = ControllerConfig(Variant.FFNN, hidden_size=3, ffnn_layers=3, input_size=2)
        params = ControllerParams.zeros(cfg)
        h = controllers.ffnn_forward(np.ones(2), params)
        assert np.allclose(h.data, 0.0)

    def test_nested_tanh_path(self):
        cfg = ControllerConfig(Variant.FFNN, hidden_size=1, ffnn_layers=3, input_size=1)
        params = ControllerParams.zeros(cfg)
        for w in params.ffnn_w:
            w.data[:] = 1.0
        h = controllers.ffnn_forward(np.array([2.0]), params)
        assert np.isclose(h.data[0], np.tanh(np.tanh(2.0)))

    def test_stateless_repeatability(self):
        rng = np.random.default_rng(2)
        cfg = ControllerConfig(Variant.FFNN, hidden_size=4, ffnn_layers=3, input_size=3)
        params = ControllerParams.zeros(cfg)
        for w in params.ffnn_w:
            w.data[:] = rng.normal(size=w.data.shape)
        x = rng.normal(size=(5, 3))
        h1 = controllers.ffnn_forward(x, params).data
        h2 = controllers.ffnn_forward(x, params).data
        assert np.array_equal(h1, h2)
        perm = rng.permutation(5)
        h3 = controllers.ffnn_forward(x[perm], params).data
        assert np.array_equal(h1[perm], h3)


@pytest.mark.parametrize("variant,compress", [
    (Variant.LSTM, False),
    (Variant.PEEPHOLE, False),
    (Variant.PEEPHOLE_COMPRESSED, True),
])
def test_step_gradients_match_finite_differences(variant, compress):
    rng = np.random.default_rng(3)
    hidden, xdim = 3, 2
    cfg = ControllerConfig(variant, hidden_size=hidden, input_size=xdim)
    weights = {
        name: rng.normal(size=(hidden, xdim + hidden)) for name in ("w_i", "w_f", "w_o", "w_c")
    }
    biases = {name: rng.normal(size=hidden) for name in ("b_i", "b_f", "b_o", "b_c")}
    chi = rng.normal(size=(2, xdim))
    h_prev = rng.normal(size=(2, hidden))
    c_prev = rng.normal(size=(2, hidden))
    probe = rng.normal(size=(2, hidden))

    def run(*arrays):
        params = ControllerParams.zeros(cfg)
        names = ("w_i", "w_f", "w_o", "w_c", "b_i", "b_f", "b_o", "b_c")
        tensors = [ad.parameter(a) for a in arrays]
        for name, t in zip(names, tensors):
            setattr(params, name, t)
        state = state_of(h_prev, c_prev)
        if variant is Variant.LSTM:
            h, new_state = controllers.lstm_step(chi, state, params)
        else:
            h, new_state = controllers.peephole_step(chi, state, params, compress)
        loss = ad.tsum(h * ad.Tensor(probe)) + ad.tsum(ad.square(new_state.c))
        return loss, tensors

    arrays = [weights[n] for n in ("w_i", "w_f", "w_o", "w_c")] + [
        biases[n] for n in ("b_i", "b_f", "b_o", "b_c")
    ]
    loss, tensors = run(*arrays)
    loss.backward()

    def f(*arrs):
        with ad.no_grad():
            value, _ = run(*arrs)
            return float(value.data)

    numeric = finite_difference(f, [a.copy() for a in arrays])
    for t, num in zip(tensors, numeric):
        assert_grads_close(t.grad, num, tol=1e-4)
