"""Two-phase training: task-agnostic pretraining and task-specific finetuning.

Each round collects episodes with the current weights (frozen snapshot,
parallel workers), appends them to the replay buffer and takes a fixed
number of Adam steps on uniformly sampled batches. Every random draw comes
from generators seeded by (seed, phase, round), so a run is reproducible
bit for bit.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from invariant_osc.config import ExperimentConfig
from invariant_osc.control.controllers import Controller, WaypointFollower, build_controller
from invariant_osc.errors import ConfigError, DivergenceError
from invariant_osc.learn.losses import TERMS, LossWeights, loss_and_gradients
from invariant_osc.learn.optim import Adam
from invariant_osc.learn.replay import ReplayBuffer
from invariant_osc.models.composed import VARIANTS, ComposedModel, DynamicsModel, build_model
from invariant_osc.models.delan import PdGuard
from invariant_osc.sim.environment import RandomizationSpec
from invariant_osc.sim.rollout import Episode, RolloutJob, collect_episodes
from invariant_osc.sim.trajectory import sample_trajectory

logger = logging.getLogger(__name__)

CheckpointHook = Callable[[int, ComposedModel], None]

_PHASES = {"pretrain": 0, "train": 1, "zeroshot": 2, "adapt": 3, "sweep": 4, "eval": 5}


@dataclass
class TrainingRun:
    model: ComposedModel
    curve: list[dict[str, float]] = field(default_factory=list)
    guard: PdGuard = field(default_factory=PdGuard)
    payload_masses: list[float] = field(default_factory=list)

    @property
    def tracking(self) -> list[float]:
        """Mean collection-episode RMSE (mm) per round."""
        return [row["rmse_mm"] for row in self.curve]


def make_follower(
    config: ExperimentConfig, kp: float | None = None, damping_ratio: float | None = None
) -> WaypointFollower:
    c = config.controller
    return WaypointFollower(
        kp=c.kp if kp is None else kp,
        damping_ratio=c.damping_ratio if damping_ratio is None else damping_ratio,
    )


def make_controller(
    kind: str,
    config: ExperimentConfig,
    model: DynamicsModel | None = None,
    guard: PdGuard | None = None,
) -> Controller:
    c = config.controller
    return build_controller(
        kind,
        config.arm,
        model=model,
        guard=guard,
        kv_sign=c.kv_sign,
        damping=c.damping,
        tau_max=c.tau_max,
        joint_kp=c.joint_kp,
        joint_damping_ratio=c.joint_damping_ratio,
        check_inertia=c.check_inertia,
    )


def episode_jobs(
    config: ExperimentConfig,
    spec: RandomizationSpec,
    kind: str,
    count: int,
    seed: int,
    phase: str,
    index: int = 0,
) -> list[RolloutJob]:
    """``count`` rollout jobs with trajectories and reset seeds drawn from one stream."""
    rng = np.random.default_rng([seed, _PHASES[phase], index])
    jobs = []
    for _ in range(count):
        trajectory = sample_trajectory(
            kind, rng, config.arm, config.sim.episode_horizon, config.sim.control_dt
        )
        jobs.append(RolloutJob(trajectory, spec, int(rng.integers(0, 2**31 - 1))))
    return jobs


def _loss_weights(config: ExperimentConfig) -> LossWeights:
    t = config.training
    return LossWeights(w_inv=t.w_inv, w_fwd=t.w_fwd, w_energy=t.w_energy)


def _fit(
    model: ComposedModel,
    collect: Callable[[int, PdGuard], list[Episode]],
    config: ExperimentConfig,
    rounds: int,
    seed: int,
    phase: str,
    hook: CheckpointHook | None,
) -> TrainingRun:
    t = config.training
    guard = PdGuard(config.network.pd_floor)
    run = TrainingRun(model=model, guard=guard)
    buffer = ReplayBuffer(t.replay_episodes)
    params = model.trainable_parameters()
    optimizer = Adam(params, lr=t.learning_rate, betas=t.betas, eps=t.adam_eps) if params else None
    weights = _loss_weights(config)
    rng = np.random.default_rng([seed, _PHASES[phase], 1_000_003])

    for r in range(rounds):
        guard.reset_counters()
        episodes = collect(r, guard)
        buffer.extend(episodes)
        run.payload_masses.extend(
            e.params.payload_mass for e in episodes if e.params is not None
        )
        rmse = float(np.mean([e.rmse_mm for e in episodes])) if episodes else float("nan")

        sums = dict.fromkeys((*TERMS, "total"), 0.0)
        steps = t.steps_per_round if optimizer is not None and len(buffer) else 0
        for _ in range(steps):
            batch = buffer.sample(rng, t.batch_size)
            terms, grads = loss_and_gradients(model, batch, weights, guard)
            if not terms["total"] <= t.divergence_threshold:
                raise DivergenceError(
                    f"{phase} loss {terms['total']:.3g} exceeded {t.divergence_threshold:.3g} "
                    f"in round {r}"
                )
            optimizer.step(grads)
            for key in sums:
                sums[key] += terms[key]

        row = {"round": float(r), "transitions": float(len(buffer)), "rmse_mm": rmse}
        row.update({key: (value / steps if steps else float("nan")) for key, value in sums.items()})
        row["guard_rate"] = guard.rate
        run.curve.append(row)
        logger.info(
            "%s round %d/%d loss=%.4g inv=%.4g fwd=%.4g energy=%.4g guard=%.3f rmse=%.2fmm",
            phase,
            r + 1,
            rounds,
            row["total"],
            row["inverse"],
            row["forward"],
            row["energy"],
            row["guard_rate"],
            rmse,
        )
        if hook is not None and t.checkpoint_every and (r + 1) % t.checkpoint_every == 0:
            hook(r, model)
    return run


def new_model(config: ExperimentConfig, variant: str, seed: int) -> ComposedModel:
    return build_model(
        variant,
        config.arm.dof,
        config.sim.history_steps,
        seed=seed,
        **config.network.model_options(),
    )


def pretrain(
    config: ExperimentConfig, seed: int, hook: CheckpointHook | None = None
) -> TrainingRun:
    """Fit the base network on analytical-OSC line tracking with the nominal arm."""
    # Base-only architecture.
    model = new_model(config, "no_residual_no_pretrain", seed)
    spec = config.pretrain_randomization()
    kind = config.evaluation.pretrain_trajectory_kind
    follower = make_follower(config)

    def collect(r: int, guard: PdGuard) -> list[Episode]:
        jobs = episode_jobs(
            config, spec, kind, config.training.episodes_per_round, seed, "pretrain", r
        )
        return collect_episodes(
            lambda: make_controller("analytical_osc", config),
            config.arm,
            config.sim,
            jobs,
            workers=config.training.workers,
            follower=follower,
        )

    return _fit(model, collect, config, config.training.pretrain_rounds, seed, "pretrain", hook)


def prepare_variant(
    config: ExperimentConfig, variant: str, base_state: dict[str, np.ndarray] | None, seed: int
) -> ComposedModel:
    """Build ``variant``, load pretrained weights and apply its freezing rule."""
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    model = new_model(config, variant, seed)
    if variant != "no_residual_no_pretrain":
        if base_state is None:
            raise ConfigError(f"variant '{variant}' needs a pretrained checkpoint")
        model.load_state_dict(base_state)
    if variant in ("oscar", "additive_residual", "no_extrinsics", "no_residual_freeze_base"):
        model.freeze("base")
    return model


def finetune(
    config: ExperimentConfig,
    base_state: dict[str, np.ndarray] | None,
    variant: str,
    seed: int,
    regime: str = "adapt",
    hook: CheckpointHook | None = None,
) -> TrainingRun:
    """Task-specific phase: the learned model drives OSC while it is being fitted."""
    model = prepare_variant(config, variant, base_state, seed)
    setup = config.regime_setup(regime)
    count = setup.workers if regime == "adapt" else config.training.episodes_per_round
    follower = make_follower(config)

    def collect(r: int, guard: PdGuard) -> list[Episode]:
        snapshot = model.snapshot()
        jobs = episode_jobs(
            config, setup.randomization, setup.trajectory_kind, count, seed, regime, r
        )
        return collect_episodes(
            lambda: make_controller("oscar", config, model=snapshot, guard=guard),
            config.arm,
            config.sim,
            jobs,
            workers=setup.workers,
            follower=follower,
        )

    return _fit(model, collect, config, config.training.finetune_rounds, seed, regime, hook)


def task_train(
    config: ExperimentConfig,
    base_state: dict[str, np.ndarray] | None,
    variant: str,
    seed: int,
    hook: CheckpointHook | None = None,
) -> TrainingRun:
    """Finetuning on the training distribution (randomised arm, circles)."""
    return finetune(config, base_state, variant, seed, regime="train", hook=hook)
