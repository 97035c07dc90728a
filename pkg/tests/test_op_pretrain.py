"""Tests for osc:pretrain operation."""

from dataclasses import replace

import pytest

from invariant_osc.artifacts import TrainingArtifact
from invariant_osc.harness.checkpoint import CURVE_COLUMNS
from invariant_osc.ops import pretrain


class TestPretrain:
    """Test suite for osc:pretrain operation."""

    def test_returns_base_checkpoint(self, pretrained):
        """The checkpoint carries only base tensors and its metadata."""
        assert isinstance(pretrained, TrainingArtifact)
        assert pretrained.checkpoint.namespaces == ("base",)
        meta = pretrained.checkpoint.meta
        assert (meta["phase"], meta["variant"], meta["seed"]) == ("pretrain", "base", 0)

    def test_curve(self, pretrained):
        """One curve row per round in the fixed column order."""
        assert pretrained.curve.columns == CURVE_COLUMNS
        assert len(pretrained.curve) == 1

    def test_hash_is_reproducible(self, tiny, pretrained):
        """Re-running with the same config and seed gives the same artifact hash."""
        again = pretrain(tiny.with_overrides(out_dir="runs"), 0)
        assert again.get_stable_hash() == pretrained.get_stable_hash()

    def test_writes_round_checkpoints(self, tiny, tmp_path):
        """With checkpoint_every set, round files appear under out_dir."""
        config = tiny.with_overrides(training=replace(tiny.training, checkpoint_every=1))
        pretrain(config, 1)
        assert (tmp_path / "checkpoints" / "pretrain_base_seed1_round1.ckpt").exists()

    def test_invalid_config(self):
        """Test that a non-config object is rejected."""
        with pytest.raises(ValueError, match="config must be ExperimentConfig"):
            pretrain({"seed": 0}, 0)

    @pytest.mark.parametrize("seed", [-1, 1.5, "0"])
    def test_invalid_seed(self, tiny, seed):
        """Test that negative or non-int seeds are rejected."""
        with pytest.raises(ValueError, match="seed"):
            pretrain(tiny, seed)
