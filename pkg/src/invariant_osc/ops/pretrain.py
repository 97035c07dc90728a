"""osc:pretrain operation - fits the base network on nominal-arm line tracking."""

from invariant.protocol import ICacheable

from invariant_osc.config import ExperimentConfig
from invariant_osc.harness.checkpoint import round_hook, training_artifact
from invariant_osc.learn.training import pretrain as run_pretrain


def pretrain(config: ExperimentConfig, seed: int) -> ICacheable:
    """Task-agnostic phase: analytical OSC drives the nominal arm along random lines.

    Args:
        config: ExperimentConfig (network, training and simulation sections).
        seed: Non-negative int selecting initial weights and data.

    Returns:
        TrainingArtifact with a base-only checkpoint and the per-round loss curve.

    Raises:
        ValueError: If config is not an ExperimentConfig or seed is invalid.
    """
    if not isinstance(config, ExperimentConfig):
        raise ValueError(f"config must be ExperimentConfig, got {type(config)}")
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a non-negative int, got {seed!r}")

    hook = round_hook(config, phase="pretrain", variant="base", seed=seed)
    run = run_pretrain(config, seed, hook)
    return training_artifact(run, config, phase="pretrain", variant="base", seed=seed)
