"""State regularization: brute-force pair enumeration oracle, scale
invariance, combined loss arithmetic, and gradient checks."""

import itertools

import numpy as np
import pytest

import dnclab.autodiff as ad
from dnclab import regularization as reg
from dnclab.errors import ConfigError
from util import assert_grads_close, finite_difference


def oracle_cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-8 or nb < 1e-8:
        return 0.0
    return float(np.dot(a, b) / (na * nb + 1e-8))


def oracle_state_loss(states, k):
    """Exhaustive enumeration of unordered distinct pairs, mean of top-K."""
    sims = sorted(
        (oracle_cosine(states[s], states[t]) for s, t in itertools.combinations(range(len(states)), 2)),
        reverse=True,
    )
    k = min(k, len(sims))
    return 1.0 - float(np.mean(sims[:k]))


class TestCosineSimilarity:
    def test_identical(self):
        assert np.isclose(float(reg.cosine_similarity([1.0, 0.0], [1.0, 0.0]).data), 1.0, atol=1e-7)

    def test_orthogonal(self):
        assert float(reg.cosine_similarity([1.0, 0.0], [0.0, 1.0]).data) == 0.0

    def test_45_degrees(self):
        val = float(reg.cosine_similarity([1.0, 1.0], [1.0, 0.0]).data)
        assert np.isclose(val, 1 / np.sqrt(2), atol=1e-7)

    def test_zero_vector_is_zero(self):
        assert float(reg.cosine_similarity([0.0, 0.0], [1.0, 0.0]).data) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ConfigError):
            reg.cosine_similarity([1.0], [1.0, 2.0])


class TestStateLoss:
    def test_identical_states_zero_loss(self):
        states = np.tile([1.0, 2.0], (5, 1))
        for k in (1, 3, 10):
            assert np.isclose(float(reg.state_regularization_loss(states, k).data), 0.0, atol=1e-7)

    def test_two_orthogonal_states(self):
        states = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert np.isclose(float(reg.state_regularization_loss(states, 1).data), 1.0)

    def test_three_states_top2(self):
        states = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        # pair cosines {1, 0, 0}; top-2 mean 0.5
        val = float(reg.state_regularization_loss(states, 2).data)
        assert np.isclose(val, 0.5, atol=1e-7)

    def test_needs_two_states(self):
        with pytest.raises(ConfigError):
            reg.state_regularization_loss(np.ones((1, 3)), 2)

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            t = int(rng.integers(2, 9))
            h = int(rng.integers(1, 5))
            k = int(rng.integers(1, 8))
            states = rng.normal(size=(t, h))
            ours = float(reg.state_regularization_loss(states, k).data)
            assert abs(ours - oracle_state_loss(states, k)) < 1e-12

    def test_scale_invariance(self):
        # the eps in the denominator perturbs each cosine by ~eps/(|a||b|),
        # so norms must be a few units for the 1e-9 tolerance to be meaningful
        rng = np.random.default_rng(1)
        states = rng.normal(size=(6, 4)) * 4.0
        base = float(reg.state_regularization_loss(states, 3).data)
        scaled = float(reg.state_regularization_loss(states * 37.5, 3).data)
        assert abs(base - scaled) < 1e-9

    def test_loss_range(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            states = rng.normal(size=(5, 3))
            val = float(reg.state_regularization_loss(states, 4).data)
            assert 0.0 <= val <= 2.0

    def test_accepts_list_of_vectors(self):
        states = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        assert np.isclose(float(reg.state_regularization_loss(states, 1).data), 1.0)

    def test_batched_matches_per_sample(self):
        rng = np.random.default_rng(3)
        batch = rng.normal(size=(4, 6, 3))
        losses = reg.state_loss_batched(ad.Tensor(batch), 3).data
        for b in range(4):
            single = float(reg.state_regularization_loss(batch[b], 3).data)
            assert np.isclose(losses[b], single, atol=1e-12)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        states = rng.normal(size=(5, 3))
        t = ad.parameter(states.copy())
        loss = reg.state_regularization_loss(t, 3)
        loss.backward()

        def f(arr):
            with ad.no_grad():
                return float(reg.state_regularization_loss(ad.Tensor(arr), 3).data)

        (numeric,) = finite_difference(f, [states.copy()])
        assert_grads_close(t.grad, numeric, tol=1e-4)


class TestCombinedLoss:
    def test_alpha_one_is_task_mean(self):
        task = [1.0, 2.0, 3.0]
        state = [9.0, 9.0, 9.0]
        assert np.isclose(float(reg.combined_loss(task, state, 1.0).data), 2.0)

    def test_alpha_zero_is_state_mean(self):
        assert np.isclose(float(reg.combined_loss([5.0], [0.5], 0.0).data), 0.5)

    def test_hand_value(self):
        assert np.isclose(float(reg.combined_loss([1.0], [0.5], 0.9).data), 0.95)

    def test_mismatched_lengths(self):
        with pytest.raises(ConfigError):
            reg.combined_loss([1.0, 2.0], [1.0], 0.9)
