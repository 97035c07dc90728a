"""Tests for osc:finetune operation."""

import numpy as np
import pytest

from invariant_osc.ops import finetune


class TestFinetune:
    """Test suite for osc:finetune operation."""

    def test_adapts_residual_only(self, tiny, trained):
        """For oscar the base stays fixed while the residual moves."""
        adapted = finetune(tiny, trained, "oscar", 0)
        before, after = trained.checkpoint.state, adapted.checkpoint.state
        for name in before:
            if name.startswith("base/"):
                np.testing.assert_array_equal(after[name], before[name])
        residual = [n for n in before if n.startswith("residual/")]
        assert any(not np.array_equal(after[n], before[n]) for n in residual)

    def test_metadata_and_curve(self, tiny, trained):
        """The artifact is tagged as an adaptation with one row per round."""
        adapted = finetune(tiny, trained, "oscar", 0)
        assert adapted.checkpoint.meta["phase"] == "adapt"
        assert len(adapted.curve) == tiny.training.finetune_rounds
        assert adapted.curve.column("rmse_mm")[0] > 0.0

    def test_invalid_config(self, trained):
        """Test that a non-config object is rejected."""
        with pytest.raises(ValueError, match="config must be ExperimentConfig"):
            finetune(None, trained, "oscar", 0)

    def test_invalid_variant(self, tiny, trained):
        """Test that unknown variants are rejected."""
        with pytest.raises(ValueError, match="variant must be one of"):
            finetune(tiny, trained, "finetune_all", 0)
