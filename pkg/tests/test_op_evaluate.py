"""Tests for osc:evaluate operation."""

import math

import pytest

from invariant_osc.artifacts import EvaluationArtifact, GainTableArtifact, TableArtifact
from invariant_osc.control.controllers import CONTROLLER_KINDS
from invariant_osc.harness.metrics import METRICS_COLUMNS, rows_from_table
from invariant_osc.ops import evaluate
from invariant_osc.ops.evaluate import follower_for


class TestEvaluate:
    """Test suite for osc:evaluate operation."""

    def test_full_grid(self, tiny, trained):
        """Every controller runs the configured number of episodes."""
        result = evaluate(tiny, "train", 0, model=trained)
        assert isinstance(result, EvaluationArtifact)
        assert result.metrics.columns == METRICS_COLUMNS
        rows = rows_from_table(result.metrics)
        assert [r.controller for r in rows] == list(CONTROLLER_KINDS)
        assert all(r.regime == "train" and r.seed == 0 for r in rows)
        assert set(result.traces) == set(CONTROLLER_KINDS)

    def test_oscar_skipped_without_model(self, tiny):
        """Without a learned model the oscar row is dropped."""
        result = evaluate(tiny, "zeroshot", 0, controllers=["oscar", "analytical_osc"])
        assert result.metrics.column("controller") == ["analytical_osc"]

    def test_learned_rows_carry_losses(self, tiny, trained):
        """oscar rows report model losses; baselines leave them empty."""
        rows = rows_from_table(
            evaluate(tiny, "train", 0, model=trained, controllers=["oscar", "joint_pd"]).metrics
        )
        learned, baseline = rows
        assert math.isfinite(learned.loss_inverse)
        assert learned.guard_evaluations > 0
        assert math.isnan(baseline.loss_inverse)

    def test_controllers_share_episodes(self, tiny):
        """All controllers face the same trajectory."""
        result = evaluate(tiny, "train", 0, controllers=["analytical_osc", "joint_pd"])
        targets = [result.traces[k]["x_d"] for k in ("analytical_osc", "joint_pd")]
        assert targets[0].tolist() == targets[1].tolist()
        assert targets[0].shape == (tiny.sim.episode_horizon, 2)

    def test_swept_gains_are_used(self, tiny):
        """A gain table changes the task-space controller's result."""
        grid = TableArtifact(("controller", "kp", "damping_ratio", "rmse_mm"), [])
        soft = GainTableArtifact({"analytical_osc": {"kp": 1.0, "damping_ratio": 1.0}}, grid)
        default = evaluate(tiny, "train", 0, controllers=["analytical_osc"])
        tuned = evaluate(tiny, "train", 0, gains=soft, controllers=["analytical_osc"])
        assert tuned.metrics.column("rmse_mm") != default.metrics.column("rmse_mm")

    def test_deterministic(self, tiny):
        """Same inputs, same hash."""
        a = evaluate(tiny, "adapt", 3, controllers=["identity_osc"])
        b = evaluate(tiny, "adapt", 3, controllers=["identity_osc"])
        assert a.get_stable_hash() == b.get_stable_hash()

    @pytest.mark.parametrize(
        ("kwargs", "message"),
        [
            ({"regime": "ood"}, "regime must be one of"),
            ({"variant": "x"}, "variant must be one of"),
            ({"seed": -1}, "seed"),
            ({"controllers": ["mpc"]}, "controller must be one of"),
            ({"gains": {"kp": 1.0}}, "gains must be GainTableArtifact"),
        ],
    )
    def test_invalid_arguments(self, tiny, kwargs, message):
        """Test that invalid arguments are rejected."""
        args = {"regime": "train", "seed": 0, **kwargs}
        with pytest.raises(ValueError, match=message):
            evaluate(tiny, **args)


class TestFollowerFor:
    """Tests for the per-controller command gains."""

    def _gains(self):
        grid = TableArtifact(("controller", "kp", "damping_ratio", "rmse_mm"), [])
        winners = {
            "analytical_osc": {"kp": 250.0, "damping_ratio": 0.5},
            "fixed_gain_osc": {"kp": 1.0, "damping_ratio": 2.0},
        }
        return GainTableArtifact(winners, grid)

    def test_swept_kind_uses_winner(self, tiny):
        follower = follower_for(tiny, "analytical_osc", self._gains())
        assert (follower.kp, follower.damping_ratio) == (250.0, 0.5)

    def test_fixed_gain_ignores_table(self, tiny):
        """The fixed-gain baseline keeps controller.fixed_kp even when a table lists it."""
        follower = follower_for(tiny, "fixed_gain_osc", self._gains())
        c = tiny.controller
        assert (follower.kp, follower.damping_ratio) == (c.fixed_kp, c.fixed_damping_ratio)

    def test_default_without_table(self, tiny):
        follower = follower_for(tiny, "identity_osc", None)
        assert (follower.kp, follower.damping_ratio) == (
            tiny.controller.kp,
            tiny.controller.damping_ratio,
        )
