"""osc:task_train operation - task-specific training on the train distribution."""

from invariant.protocol import ICacheable

from invariant_osc.artifacts import CheckpointArtifact, TrainingArtifact
from invariant_osc.config import ExperimentConfig
from invariant_osc.harness.checkpoint import round_hook, state_of, training_artifact
from invariant_osc.learn.training import task_train as run_task_train
from invariant_osc.models.composed import VARIANTS


def task_train(
    config: ExperimentConfig,
    base: TrainingArtifact | CheckpointArtifact | None,
    variant: str,
    seed: int,
) -> ICacheable:
    """Train ``variant`` on randomised arms tracking circles, starting from ``base``.

    Args:
        config: ExperimentConfig.
        base: Pretraining result or checkpoint; None only for no_residual_no_pretrain.
        variant: Ablation variant name.
        seed: Non-negative int.

    Returns:
        TrainingArtifact with the full model checkpoint and loss curve.
    """
    if not isinstance(config, ExperimentConfig):
        raise ValueError(f"config must be ExperimentConfig, got {type(config)}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a non-negative int, got {seed!r}")

    hook = round_hook(config, phase="train", variant=variant, seed=seed)
    run = run_task_train(config, state_of(base), variant, seed, hook)
    return training_artifact(run, config, phase="train", variant=variant, seed=seed)
