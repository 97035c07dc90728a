"""osc:evaluate operation - runs the controller grid over one regime cell."""

import logging

import numpy as np
from invariant.protocol import ICacheable

from invariant_osc.artifacts import (
    CheckpointArtifact,
    EvaluationArtifact,
    GainTableArtifact,
    TrainingArtifact,
)
from invariant_osc.autodiff import no_grad
from invariant_osc.config import REGIMES, ExperimentConfig
from invariant_osc.control.controllers import CONTROLLER_KINDS, SWEPT_KINDS, WaypointFollower
from invariant_osc.errors import NonFiniteLossError
from invariant_osc.harness.checkpoint import model_from
from invariant_osc.harness.metrics import MetricsRow, metrics_table
from invariant_osc.learn.losses import Batch, LossWeights, dynamics_loss
from invariant_osc.learn.training import episode_jobs, make_controller, make_follower
from invariant_osc.models.composed import VARIANTS, ComposedModel
from invariant_osc.models.delan import PdGuard
from invariant_osc.sim.replay_log import episode_arrays
from invariant_osc.sim.rollout import Episode, collect_episodes

logger = logging.getLogger(__name__)


def _episode_losses(
    model: ComposedModel, episode: Episode, weights: LossWeights
) -> dict[str, float]:
    if not episode.transitions:
        return {}
    batch = Batch.from_transitions(episode.transitions)
    try:
        with no_grad():
            _, breakdown = dynamics_loss(model, batch, weights)
    except NonFiniteLossError:
        return {}
    return breakdown


def follower_for(
    config: ExperimentConfig, kind: str, gains: GainTableArtifact | None
) -> WaypointFollower:
    """Sweep winners for swept kinds; the fixed-gain baseline always keeps its own gains."""
    c = config.controller
    if kind == "fixed_gain_osc":
        return make_follower(config, c.fixed_kp, c.fixed_damping_ratio)
    tuned = gains.gain_for(kind) if gains is not None and kind in SWEPT_KINDS else None
    return make_follower(config, *tuned) if tuned else make_follower(config)


def evaluate(
    config: ExperimentConfig,
    regime: str,
    seed: int,
    variant: str = "oscar",
    model: TrainingArtifact | CheckpointArtifact | None = None,
    gains: GainTableArtifact | None = None,
    controllers: list[str] | None = None,
) -> ICacheable:
    """Evaluate every controller on the same episodes of ``regime``.

    Args:
        config: ExperimentConfig.
        regime: "train", "zeroshot" or "adapt".
        seed: Non-negative int; fixes trajectories and episode parameters.
        variant: Architecture of ``model``.
        model: Learned model for the oscar controller; without it oscar is skipped.
        gains: Swept task-space gains; controllers missing from it use
            ``controller.kp``. ``fixed_gain_osc`` always runs on
            ``controller.fixed_kp``.
        controllers: Subset of controller kinds (default: the full grid).

    Returns:
        EvaluationArtifact with one metrics row per (controller, episode).

    Raises:
        ValueError: On an unknown regime, variant or controller kind.
        NonFiniteError: If an episode produced no finite tracking error.
    """
    if not isinstance(config, ExperimentConfig):
        raise ValueError(f"config must be ExperimentConfig, got {type(config)}")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a non-negative int, got {seed!r}")
    kinds = list(CONTROLLER_KINDS) if controllers is None else list(controllers)
    for kind in kinds:
        if kind not in CONTROLLER_KINDS:
            raise ValueError(f"controller must be one of {CONTROLLER_KINDS}, got {kind!r}")
    if gains is not None and not isinstance(gains, GainTableArtifact):
        raise ValueError(f"gains must be GainTableArtifact or None, got {type(gains)}")

    learned = model_from(config, variant, model) if model is not None else None
    if learned is None and "oscar" in kinds:
        kinds.remove("oscar")
    setup = config.regime_setup(regime)
    jobs = episode_jobs(
        config,
        setup.randomization,
        setup.trajectory_kind,
        config.evaluation.episodes,
        seed,
        "eval",
    )
    weights = LossWeights(config.training.w_inv, config.training.w_fwd, config.training.w_energy)
    guard = PdGuard(config.network.pd_floor)

    rows: list[MetricsRow] = []
    traces: dict[str, dict[str, np.ndarray]] = {}
    for kind in kinds:
        follower = follower_for(config, kind, gains)
        snapshot = learned.snapshot() if learned is not None and kind == "oscar" else None
        episodes = collect_episodes(
            lambda: make_controller(kind, config, model=snapshot, guard=guard),
            config.arm,
            config.sim,
            jobs,
            workers=setup.workers,
            follower=follower,
        )
        for i, episode in enumerate(episodes):
            losses = _episode_losses(snapshot, episode, weights) if snapshot is not None else None
            rows.append(
                MetricsRow.from_episode(
                    episode,
                    regime=regime,
                    variant=variant,
                    seed=seed,
                    controller=kind,
                    index=i,
                    guard=(episode.guard_activations, episode.guard_evaluations),
                    losses=losses,
                )
            )
        traces[kind] = episode_arrays(episodes[0])
        logger.info(
            "%s seed=%d %s: rmse %.2f mm over %d episodes (%d truncated)",
            regime,
            seed,
            kind,
            float(np.mean([e.rmse_mm for e in episodes])),
            len(episodes),
            sum(e.truncated for e in episodes),
        )
    return EvaluationArtifact(metrics_table(rows), traces)
