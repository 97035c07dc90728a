"""Tests for checkpoint files and training artifacts."""

from dataclasses import replace

import numpy as np
import pytest

from invariant_osc.archive import FORMAT_VERSION
from invariant_osc.artifacts import CheckpointArtifact
from invariant_osc.errors import CheckpointError
from invariant_osc.harness.checkpoint import (
    CURVE_COLUMNS,
    checkpoint_from_model,
    load_checkpoint,
    model_from,
    round_hook,
    save_checkpoint,
    state_of,
    training_artifact,
)
from invariant_osc.learn.training import TrainingRun, new_model


class TestCheckpointFiles:
    """Tests for saving and loading .ckpt files."""

    def test_save_and_load(self, tiny, tmp_path):
        """Weights and metadata come back from disk."""
        model = new_model(tiny, "oscar", seed=0)
        checkpoint = checkpoint_from_model(model, tiny, variant="oscar")
        path = save_checkpoint(checkpoint, tmp_path / "nested" / "model.ckpt")
        loaded = load_checkpoint(path)
        assert loaded.meta["format_version"] == FORMAT_VERSION
        assert loaded.meta["config_hash"] == tiny.stable_hash()
        assert loaded.meta["variant"] == "oscar"
        assert loaded.namespaces == ("base", "encoder", "residual")
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(loaded.state[name], value)

    def test_missing_file(self, tmp_path):
        """A missing path is a checkpoint error, not an OSError."""
        with pytest.raises(CheckpointError, match="checkpoint not found"):
            load_checkpoint(tmp_path / "absent.ckpt")

    def test_corrupt_file(self, tmp_path):
        """Garbage bytes are rejected."""
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"\x00\x00")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestModelFrom:
    """Tests for rebuilding models from checkpoints."""

    def test_rebuilds_weights(self, tiny):
        """Every tensor is loaded into a fresh architecture."""
        source = new_model(tiny, "oscar", seed=5)
        rebuilt = model_from(tiny, "oscar", checkpoint_from_model(source))
        for name, value in source.state_dict().items():
            np.testing.assert_array_equal(rebuilt.state_dict()[name], value)

    def test_base_only_checkpoint_lacks_residual(self, tiny):
        """A pretrained base cannot stand in for the full model."""
        base = checkpoint_from_model(new_model(tiny, "no_residual_no_pretrain", seed=0))
        with pytest.raises(CheckpointError, match="checkpoint lacks"):
            model_from(tiny, "oscar", base)

    def test_state_of(self, tiny):
        """Training results and checkpoints both expose their tensors."""
        checkpoint = CheckpointArtifact({"base/w0": np.ones(2)})
        run = TrainingRun(model=new_model(tiny, "no_residual_no_pretrain", seed=0))
        artifact = training_artifact(run, tiny, phase="pretrain", variant="oscar", seed=0)
        assert state_of(None) is None
        assert state_of(checkpoint) is checkpoint.state
        assert set(state_of(artifact)) == set(run.model.state_dict())
        with pytest.raises(ValueError, match="source must be"):
            state_of({"base/w0": np.ones(2)})

    def test_training_artifact_curve(self, tiny):
        """The curve table uses the fixed column order."""
        run = TrainingRun(model=new_model(tiny, "no_residual_no_pretrain", seed=0))
        run.curve.append({name: 1.0 for name in CURVE_COLUMNS})
        artifact = training_artifact(run, tiny, phase="train", variant="oscar", seed=2)
        assert artifact.curve.columns == CURVE_COLUMNS
        assert artifact.checkpoint.meta["phase"] == "train"
        assert artifact.checkpoint.meta["seed"] == 2


class TestRoundHook:
    """Tests for periodic checkpoints."""

    def test_disabled_by_default(self, tiny):
        """checkpoint_every = 0 means no hook."""
        assert round_hook(tiny, phase="pretrain", variant="oscar", seed=0) is None

    def test_writes_numbered_files(self, tiny, tmp_path):
        """Files are named by phase, variant, seed and one-based round."""
        config = tiny.with_overrides(training=replace(tiny.training, checkpoint_every=1))
        hook = round_hook(config, phase="train", variant="oscar", seed=3)
        hook(0, new_model(config, "oscar", seed=0))
        path = tmp_path / "checkpoints" / "train_oscar_seed3_round1.ckpt"
        assert path.exists()
        assert load_checkpoint(path).meta["round"] == 0
