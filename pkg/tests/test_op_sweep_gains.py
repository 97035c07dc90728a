"""Tests for osc:sweep_gains operation."""

import math
from dataclasses import replace

import pytest

from invariant_osc.artifacts import GainTableArtifact
from invariant_osc.ops import sweep_gains
from invariant_osc.ops.sweep_gains import GRID_COLUMNS, gain_grid


class TestGainGrid:
    """Tests for the sweep grid."""

    def test_log_spaced_kp_major(self, tiny):
        """kp is geometric between the bounds; ratios vary fastest."""
        config = tiny.with_overrides(
            controller=replace(
                tiny.controller,
                sweep_kp_range=(10.0, 1000.0),
                sweep_kp_points=3,
                sweep_damping_ratios=(0.5, 1.0),
            )
        )
        grid = gain_grid(config)
        assert [kp for kp, _ in grid] == pytest.approx([10.0, 10.0, 100.0, 100.0, 1000.0, 1000.0])
        assert [ratio for _, ratio in grid] == [0.5, 1.0] * 3


class TestSweepGains:
    """Test suite for osc:sweep_gains operation."""

    def test_baselines_without_model(self, tiny):
        """Only the exact and identity task-space controllers are swept."""
        result = sweep_gains(tiny, 0)
        assert isinstance(result, GainTableArtifact)
        assert set(result.gains) == {"analytical_osc", "identity_osc"}
        assert result.grid.columns == GRID_COLUMNS
        assert len(result.grid) == 2 * len(gain_grid(tiny))

    def test_winner_is_grid_minimum(self, tiny):
        """The chosen gains have the lowest grid score for their controller."""
        result = sweep_gains(tiny, 0)
        for kind, entry in result.gains.items():
            scores = [r for r in result.grid.records() if r["controller"] == kind]
            best = min(scores, key=lambda r: r["rmse_mm"])
            assert (entry["kp"], entry["damping_ratio"]) == (best["kp"], best["damping_ratio"])
            assert entry["rmse_mm"] == best["rmse_mm"]
            assert math.isfinite(entry["verify_rmse_mm"])

    def test_learned_controller_swept(self, tiny, trained):
        """With a model the learned controller gets its own gains."""
        result = sweep_gains(tiny, 0, model=trained)
        assert result.gain_for("oscar") is not None

    def test_invalid_arguments(self, tiny):
        """Test that invalid seeds and variants are rejected."""
        with pytest.raises(ValueError, match="seed"):
            sweep_gains(tiny, -1)
        with pytest.raises(ValueError, match="variant must be one of"):
            sweep_gains(tiny, 0, variant="bigger")
