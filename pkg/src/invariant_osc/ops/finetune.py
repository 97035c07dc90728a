"""osc:finetune operation - few-worker adaptation under the adapt regime."""

from invariant.protocol import ICacheable

from invariant_osc.artifacts import CheckpointArtifact, TrainingArtifact
from invariant_osc.config import ExperimentConfig
from invariant_osc.harness.checkpoint import round_hook, state_of, training_artifact
from invariant_osc.learn.training import finetune as run_finetune
from invariant_osc.models.composed import VARIANTS


def finetune(
    config: ExperimentConfig,
    base: TrainingArtifact | CheckpointArtifact | None,
    variant: str,
    seed: int,
) -> ICacheable:
    """Adapt ``variant`` to the heavy-payload lissajous setting.

    Frozen namespaces follow the variant's rule; for oscar only the residual
    and encoder move. The returned curve's ``rmse_mm`` column is the per-round
    tracking error, its first row measured before any update.
    """
    if not isinstance(config, ExperimentConfig):
        raise ValueError(f"config must be ExperimentConfig, got {type(config)}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a non-negative int, got {seed!r}")

    hook = round_hook(config, phase="adapt", variant=variant, seed=seed)
    run = run_finetune(config, state_of(base), variant, seed, regime="adapt", hook=hook)
    return training_artifact(run, config, phase="adapt", variant=variant, seed=seed)
