"""osc:sweep_gains operation - grid search over task-space stiffness and damping."""

import logging
import math

import numpy as np
from invariant.protocol import ICacheable

from invariant_osc.artifacts import (
    CheckpointArtifact,
    GainTableArtifact,
    TableArtifact,
    TrainingArtifact,
)
from invariant_osc.config import ExperimentConfig
from invariant_osc.control.controllers import SWEPT_KINDS
from invariant_osc.harness.checkpoint import model_from
from invariant_osc.learn.training import episode_jobs, make_controller, make_follower
from invariant_osc.models.composed import VARIANTS, ComposedModel
from invariant_osc.models.delan import PdGuard
from invariant_osc.sim.rollout import RolloutJob, collect_episodes

logger = logging.getLogger(__name__)

GRID_COLUMNS = ("controller", "kp", "damping_ratio", "rmse_mm")


def gain_grid(config: ExperimentConfig) -> list[tuple[float, float]]:
    """Log-spaced kp crossed with the configured damping ratios, kp-major."""
    c = config.controller
    low, high = c.sweep_kp_range
    kps = np.geomspace(low, high, c.sweep_kp_points)
    return [(float(kp), float(ratio)) for kp in kps for ratio in c.sweep_damping_ratios]


def _mean_rmse(
    config: ExperimentConfig,
    kind: str,
    model: ComposedModel | None,
    kp: float,
    ratio: float,
    jobs: list[RolloutJob],
    workers: int,
) -> float:
    guard = PdGuard(config.network.pd_floor)
    episodes = collect_episodes(
        lambda: make_controller(kind, config, model=model, guard=guard),
        config.arm,
        config.sim,
        jobs,
        workers=workers,
        follower=make_follower(config, kp, ratio),
    )
    return float(np.mean([e.rmse_mm for e in episodes]))


def sweep_gains(
    config: ExperimentConfig,
    seed: int,
    model: TrainingArtifact | CheckpointArtifact | None = None,
    variant: str = "oscar",
) -> ICacheable:
    """Pick (kp, damping ratio) per task-space controller on the train distribution.

    The winner minimises mean RMSE over ``controller.sweep_episodes`` episodes;
    ties keep the earlier grid point. Each winner is re-run on a fresh episode
    set and that score is reported as ``verify_rmse_mm``.

    Args:
        config: ExperimentConfig.
        seed: Non-negative int.
        model: Learned model; oscar is swept only when it is given.
        variant: Architecture of ``model``.

    Returns:
        GainTableArtifact.
    """
    if not isinstance(config, ExperimentConfig):
        raise ValueError(f"config must be ExperimentConfig, got {type(config)}")
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a non-negative int, got {seed!r}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")

    learned = model_from(config, variant, model) if model is not None else None
    setup = config.regime_setup("train")
    count = config.controller.sweep_episodes
    stream = (config, setup.randomization, setup.trajectory_kind, count, seed, "sweep")
    jobs = episode_jobs(*stream, 0)
    fresh = episode_jobs(*stream, 1)
    grid = gain_grid(config)

    rows = []
    gains: dict[str, dict[str, float]] = {}
    for kind in SWEPT_KINDS:
        if kind == "oscar" and learned is None:
            continue
        snapshot = learned.snapshot() if kind == "oscar" else None
        best: tuple[float, float, float] | None = None
        for kp, ratio in grid:
            score = _mean_rmse(config, kind, snapshot, kp, ratio, jobs, setup.workers)
            rows.append((kind, kp, ratio, score))
            if math.isfinite(score) and (best is None or score < best[2]):
                best = (kp, ratio, score)
        if best is None:
            logger.warning("no finite sweep score for %s; keeping configured gains", kind)
            best = (config.controller.kp, config.controller.damping_ratio, math.inf)
        kp, ratio, score = best
        verify = _mean_rmse(config, kind, snapshot, kp, ratio, fresh, setup.workers)
        gains[kind] = {"kp": kp, "damping_ratio": ratio, "rmse_mm": score, "verify_rmse_mm": verify}
        logger.info(
            "sweep %s: kp=%.4g ratio=%.3g rmse=%.2f mm (fresh seed %.2f mm)",
            kind,
            kp,
            ratio,
            score,
            verify,
        )
    return GainTableArtifact(gains, TableArtifact(GRID_COLUMNS, rows))
