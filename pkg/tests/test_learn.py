"""Tests for the dynamics losses, the optimiser and the replay buffer."""

import numpy as np
import pytest

from invariant_osc.autodiff import Tensor
from invariant_osc.control.controllers import build_controller
from invariant_osc.dynamics.rigid_body import gravity_torque
from invariant_osc.errors import ConfigError, NonFiniteLossError
from invariant_osc.learn.losses import Batch, LossWeights, dynamics_loss, loss_and_gradients
from invariant_osc.learn.optim import Adam
from invariant_osc.learn.replay import ReplayBuffer
from invariant_osc.models.analytical import AnalyticalModel
from invariant_osc.models.composed import build_model
from invariant_osc.sim.environment import ArmEnv, RandomizationSpec, SimConfig
from invariant_osc.sim.rollout import Episode, rollout
from invariant_osc.sim.trajectory import sample_trajectory

SIM = SimConfig(sim_dt=0.005, control_dt=0.05, episode_horizon=6, history_steps=2)
SMALL = {
    "base_width": 8,
    "base_depth": 1,
    "residual_width": 8,
    "residual_depth": 1,
    "encoder_width": 8,
    "encoder_depth": 2,
    "latent_dim": 2,
}


def _episode(arm, seed=0, spec=None):
    rng = np.random.default_rng(seed)
    traj = sample_trajectory("line", rng, arm, SIM.episode_horizon, SIM.control_dt)
    return rollout(
        build_controller("analytical_osc", arm),
        traj,
        ArmEnv(arm, SIM),
        spec or RandomizationSpec().nominal(),
        seed,
    )


def _static_batch(arm, q, k=2):
    """Rows at rest holding their posture: tau = g(q)."""
    zeros = np.zeros_like(q)
    tau = np.array([gravity_torque(arm, qi) for qi in q])
    return Batch(q=q, qd=zeros, qdd=zeros, tau=tau, history=np.zeros((len(q), k, 3 * q.shape[1])))


def _random_batch(rng, size=6, n=3, k=2):
    return Batch(
        q=rng.uniform(-1, 1, (size, n)),
        qd=rng.normal(size=(size, n)),
        qdd=rng.normal(size=(size, n)),
        tau=rng.normal(size=(size, n)),
        history=rng.normal(size=(size, k, 3 * n)),
    )


class TestLossWeights:
    """Tests for LossWeights validation."""

    def test_negative_weight(self):
        """Negative weights are rejected."""
        with pytest.raises(ConfigError):
            LossWeights(w_inv=-1.0)

    def test_all_zero(self):
        """At least one term must count."""
        with pytest.raises(ConfigError, match="not all zero"):
            LossWeights(0.0, 0.0, 0.0)


class TestDynamicsLoss:
    """Tests for dynamics_loss and loss_and_gradients."""

    def test_exact_model_on_frictionless_data(self, frictionless_arm):
        """The exact model has (numerically) zero loss on frictionless transitions."""
        episode = _episode(frictionless_arm)
        batch = Batch.from_transitions(episode.transitions)
        loss, breakdown = dynamics_loss(AnalyticalModel(frictionless_arm), batch)
        assert float(loss.value) < 1e-10
        assert set(breakdown) == {"inverse", "forward", "energy", "total"}

    def test_wrong_mass_is_penalised(self, frictionless_arm):
        """Scaling the mass matrix raises every term."""
        batch = Batch.from_transitions(_episode(frictionless_arm).transitions)
        _, exact = dynamics_loss(AnalyticalModel(frictionless_arm), batch)
        _, wrong = dynamics_loss(AnalyticalModel(frictionless_arm, mass_scale=1.5), batch)
        assert wrong["inverse"] > exact["inverse"]
        assert wrong["total"] > 1e-6

    def test_weights_combine_terms(self):
        """The total is the weighted sum of the term means."""
        rng = np.random.default_rng(0)
        batch = _random_batch(rng)
        model = build_model("oscar", 3, 2, **SMALL)
        weights = LossWeights(0.5, 2.0, 0.25)
        _, b = dynamics_loss(model, batch, weights)
        expected = 0.5 * b["inverse"] + 2.0 * b["forward"] + 0.25 * b["energy"]
        assert b["total"] == pytest.approx(expected)

    def test_non_finite_row_reported(self):
        """A NaN in the batch is reported with its row index."""
        batch = _random_batch(np.random.default_rng(1))
        batch.tau[4, 1] = np.nan
        model = build_model("no_residual_no_pretrain", 3, 2, **SMALL)
        with pytest.raises(NonFiniteLossError) as info:
            dynamics_loss(model, batch)
        assert info.value.row == 4
        assert np.isnan(info.value.values["tau"][1])
        message = str(info.value)
        assert "batch row 4" in message
        assert f"q={batch.q[4].tolist()}" in message
        assert f"qd={batch.qd[4].tolist()}" in message
        assert f"qdd={batch.qdd[4].tolist()}" in message
        assert f"tau={batch.tau[4].tolist()}" in message

    def test_static_batch_cannot_identify_mass(self, arm):
        """At rest the loss only sees gravity: doubling H costs nothing."""
        q = np.random.default_rng(3).uniform(-1.0, 1.0, (8, 3))
        batch = _static_batch(arm, q)
        loss, breakdown = dynamics_loss(AnalyticalModel(arm, mass_scale=2.0), batch)
        assert float(loss.value) == pytest.approx(0.0, abs=1e-20)
        assert breakdown["inverse"] == pytest.approx(0.0, abs=1e-20)

    def test_zero_weight_model_inverse_term(self, arm):
        """With H = I and no potential the inverse term is the mean squared gravity torque."""
        q = np.random.default_rng(4).uniform(-1.0, 1.0, (8, 3))
        model = build_model("no_residual_no_pretrain", 3, 2, init_scale=0.0, **SMALL)
        _, breakdown = dynamics_loss(model, _static_batch(arm, q))
        expected = np.mean([np.sum(gravity_torque(arm, qi) ** 2) for qi in q])
        assert breakdown["inverse"] == pytest.approx(expected, rel=1e-12)
        assert breakdown["energy"] == 0.0

    def test_frozen_base_gets_no_gradient(self):
        """Only trainable namespaces appear in the gradient map."""
        model = build_model("oscar", 3, 2, **SMALL)
        model.freeze("base")
        _, grads = loss_and_gradients(model, _random_batch(np.random.default_rng(2)))
        assert grads
        assert all(not name.startswith("base/") for name in grads)
        assert set(grads) == set(model.trainable_parameters())

    def test_batch_from_transitions(self, arm):
        """Stacked transitions keep their shapes."""
        episode = _episode(arm)
        batch = Batch.from_transitions(episode.transitions)
        assert len(batch) == len(episode)
        assert batch.history.shape == (len(episode), 2, 9)

    def test_empty_batch_rejected(self):
        """A batch needs at least one row."""
        with pytest.raises(ValueError, match="at least one row"):
            Batch(*(np.zeros((0, 3)) for _ in range(4)), history=np.zeros((0, 2, 9)))


class TestAdam:
    """Tests for the Adam optimiser."""

    def test_first_step_moves_by_learning_rate(self):
        """The bias-corrected first step has magnitude lr along the gradient sign."""
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        Adam({"w": p}, lr=0.1).step({"w": np.array([3.0, -0.5])})
        np.testing.assert_allclose(p.value, [0.9, -1.9], atol=1e-6)

    def test_minimises_quadratic(self):
        """Repeated steps drive a quadratic to its minimum."""
        p = Tensor(np.array([2.0, -3.0]), requires_grad=True)
        optimizer = Adam({"w": p}, lr=0.05)
        for _ in range(600):
            optimizer.step({"w": 2.0 * p.value})
        np.testing.assert_allclose(p.value, 0.0, atol=0.1)

    def test_unknown_names_skipped(self):
        """Gradients for parameters the optimiser does not own are ignored."""
        p = Tensor(np.array([1.0]), requires_grad=True)
        optimizer = Adam({"w": p}, lr=0.1)
        optimizer.step({"other": np.array([1.0])})
        np.testing.assert_array_equal(p.value, [1.0])
        assert optimizer.state.step == 1


class TestReplayBuffer:
    """Tests for ReplayBuffer."""

    def test_capacity_drops_oldest(self, arm):
        """Only the most recent episodes are kept."""
        buffer = ReplayBuffer(2)
        buffer.extend([_episode(arm, seed) for seed in range(3)])
        assert buffer.episode_count == 2
        assert len(buffer) == 2 * SIM.episode_horizon

    def test_empty_episodes_ignored(self):
        """Episodes without transitions are not stored."""
        buffer = ReplayBuffer(3)
        buffer.extend([Episode(seed=0, trajectory_kind="line", params=None)])
        assert buffer.episode_count == 0

    def test_sample_is_deterministic(self, arm):
        """The same generator state draws the same rows."""
        buffer = ReplayBuffer(5)
        buffer.extend([_episode(arm, seed) for seed in range(2)])
        a = buffer.sample(np.random.default_rng(7), 8)
        b = buffer.sample(np.random.default_rng(7), 8)
        np.testing.assert_array_equal(a.q, b.q)
        assert len(a) == 8

    def test_sample_empty(self):
        """Sampling an empty buffer is an error."""
        with pytest.raises(ValueError, match="empty"):
            ReplayBuffer().sample(np.random.default_rng(0), 4)

    def test_payload_masses_recorded(self, arm):
        """Each stored episode records its payload mass."""
        buffer = ReplayBuffer(3)
        buffer.extend([_episode(arm, 0, RandomizationSpec().pinned_at_max(0.8))])
        assert list(buffer.payload_masses) == [0.8]

    def test_capacity_validated(self):
        """Zero capacity is rejected."""
        with pytest.raises(ValueError, match="capacity"):
            ReplayBuffer(0)
