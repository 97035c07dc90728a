"""Checkpoint files: the named-tensor archive with a config hash in its manifest."""

import logging
from pathlib import Path
from typing import Any

import numpy as np

from invariant_osc.archive import FORMAT_VERSION
from invariant_osc.artifacts import CheckpointArtifact, TableArtifact, TrainingArtifact
from invariant_osc.config import ExperimentConfig
from invariant_osc.errors import CheckpointError
from invariant_osc.learn.training import CheckpointHook, TrainingRun, new_model
from invariant_osc.models.composed import ComposedModel

logger = logging.getLogger(__name__)


def checkpoint_from_model(
    model: ComposedModel,
    config: ExperimentConfig | None = None,
    **meta: Any,
) -> CheckpointArtifact:
    """Capture ``model``'s parameters; ``meta`` is stored verbatim in the manifest."""
    doc = dict(meta)
    doc["format_version"] = FORMAT_VERSION
    if config is not None:
        doc["config_hash"] = config.stable_hash()
    return CheckpointArtifact(model.state_dict(), doc)


def save_checkpoint(checkpoint: CheckpointArtifact, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint.to_bytes())
    logger.info("wrote checkpoint %s (%d tensors)", path, len(checkpoint.state))
    return path


def load_checkpoint(path: Path | str) -> CheckpointArtifact:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise CheckpointError(f"checkpoint not found: {path}") from exc
    checkpoint = CheckpointArtifact.from_bytes(data)
    logger.debug("loaded checkpoint %s namespaces=%s", path, checkpoint.namespaces)
    return checkpoint


CURVE_COLUMNS = (
    "round",
    "transitions",
    "inverse",
    "forward",
    "energy",
    "total",
    "guard_rate",
    "rmse_mm",
)


def curve_table(run: TrainingRun) -> TableArtifact:
    return TableArtifact.from_records(CURVE_COLUMNS, run.curve)


def training_artifact(
    run: TrainingRun, config: ExperimentConfig, *, phase: str, variant: str, seed: int
) -> TrainingArtifact:
    checkpoint = checkpoint_from_model(run.model, config, phase=phase, variant=variant, seed=seed)
    return TrainingArtifact(checkpoint, curve_table(run))


def state_of(
    source: TrainingArtifact | CheckpointArtifact | None,
) -> dict[str, np.ndarray] | None:
    """Parameter tensors carried by a training result or checkpoint."""
    if source is None:
        return None
    if isinstance(source, TrainingArtifact):
        return source.checkpoint.state
    if isinstance(source, CheckpointArtifact):
        return source.state
    raise ValueError(
        f"source must be TrainingArtifact, CheckpointArtifact or None, got {type(source)}"
    )


def round_hook(
    config: ExperimentConfig, *, phase: str, variant: str, seed: int
) -> CheckpointHook | None:
    """Periodic checkpoint writer under ``<out_dir>/checkpoints``; None when disabled."""
    if not config.training.checkpoint_every:
        return None
    directory = Path(config.out_dir) / "checkpoints"

    def hook(round_index: int, model: ComposedModel) -> None:
        checkpoint = checkpoint_from_model(
            model, config, phase=phase, variant=variant, seed=seed, round=round_index
        )
        save_checkpoint(
            checkpoint, directory / f"{phase}_{variant}_seed{seed}_round{round_index + 1}.ckpt"
        )

    return hook


def model_from(
    config: ExperimentConfig,
    variant: str,
    source: TrainingArtifact | CheckpointArtifact,
) -> ComposedModel:
    """Rebuild ``variant``'s architecture and load every tensor ``source`` carries."""
    model = new_model(config, variant, 0)
    state = state_of(source)
    missing = sorted(set(model.parameters()) - set(state))
    if missing:
        raise CheckpointError(
            f"checkpoint lacks {len(missing)} tensors for variant '{variant}', e.g. '{missing[0]}'"
        )
    model.load_state_dict(state)
    return model
