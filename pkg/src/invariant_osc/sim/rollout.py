"""Closed-loop rollouts and parallel episode collection."""

import logging
from collections import deque
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from invariant_osc.control.controllers import ControlInput, Controller, WaypointFollower
from invariant_osc.dynamics.arm import ArmModel, JointState
from invariant_osc.dynamics.rigid_body import end_effector, ik_solve
from invariant_osc.errors import NonFiniteError
from invariant_osc.sim.environment import ArmEnv, EpisodeParams, RandomizationSpec, SimConfig
from invariant_osc.sim.trajectory import TrajectorySpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    """One control step: the dynamics record and the window that preceded it."""

    state: JointState
    history: np.ndarray  # (K, 3N) rows t-K .. t-1 of (q, qd, tau)
    step: int


@dataclass
class Episode:
    seed: int
    trajectory_kind: str
    params: EpisodeParams | None
    transitions: list[Transition] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    x: list[np.ndarray] = field(default_factory=list)
    x_d: list[np.ndarray] = field(default_factory=list)
    truncated: bool = False
    truncation_reason: str = ""
    guard_activations: int = 0
    guard_evaluations: int = 0

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def rmse_mm(self) -> float:
        """Task-space tracking RMSE in millimetres (inf for empty episodes)."""
        if not self.errors:
            return float("inf")
        e = np.asarray(self.errors)
        return float(np.sqrt(np.mean(e * e)) * 1000.0)

    @property
    def mean_abs_tau(self) -> float:
        if not self.transitions:
            return 0.0
        return float(np.mean([np.abs(t.state.tau) for t in self.transitions]))


def _history_row(q: np.ndarray, qd: np.ndarray, tau: np.ndarray) -> np.ndarray:
    return np.concatenate([q, qd, tau])


def rollout(
    controller: Controller,
    trajectory: TrajectorySpec,
    env: ArmEnv,
    spec: RandomizationSpec,
    seed: int,
    follower: WaypointFollower | None = None,
) -> Episode:
    """Run one episode of ``trajectory.horizon`` control steps.

    The arm starts at rest on the trajectory start point (IK seeded from
    the sampled posture). Step t commands the reference of
    ``trajectory.reference()``, which looks ahead to waypoint t, and its
    error is measured against waypoint t when the step ends. A non-finite
    torque or state ends the episode early with ``truncated`` set.
    """
    follower = follower or WaypointFollower()
    env.reset(seed, spec)
    n = env.nominal.dof
    q0 = ik_solve(env.model, env.q, trajectory.start)
    env.set_state(q0, np.zeros(n))
    controller.reset(env.model)

    k = env.config.history_steps
    history: deque[np.ndarray] = deque(
        [_history_row(q0, np.zeros(n), np.zeros(n))] * k, maxlen=k
    )
    episode = Episode(seed=seed, trajectory_kind=trajectory.kind, params=env.params)
    points, velocities, accelerations = trajectory.reference()

    for t in range(trajectory.horizon):
        q, qd = env.q.copy(), env.qd.copy()
        window = np.array(history)
        command = follower.command(points[t], velocities[t], accelerations[t])
        try:
            inp = ControlInput(q, qd, env.t, command, window, trajectory.waypoints[t])
            tau = np.asarray(controller.act(inp))
            record = env.step(tau)
        except NonFiniteError as exc:
            episode.truncated = True
            episode.truncation_reason = str(exc)
            logger.warning("episode seed=%d truncated at step %d: %s", seed, t, exc)
            break
        x, _ = end_effector(env.model, env.q)
        episode.transitions.append(Transition(record, window, t))
        episode.x.append(x)
        episode.x_d.append(trajectory.waypoints[t].copy())
        episode.errors.append(float(np.linalg.norm(x - trajectory.waypoints[t])))
        history.append(_history_row(q, qd, tau))
    episode.guard_activations, episode.guard_evaluations = getattr(
        controller, "guard_counts", (0, 0)
    )
    return episode


@dataclass(frozen=True)
class RolloutJob:
    trajectory: TrajectorySpec
    spec: RandomizationSpec
    seed: int


def collect_episodes(
    make_controller: Callable[[], Controller],
    nominal: ArmModel,
    sim_config: SimConfig,
    jobs: Sequence[RolloutJob],
    *,
    workers: int = 1,
    follower: WaypointFollower | None = None,
) -> list[Episode]:
    """Run ``jobs`` on a thread pool; results come back in job order.

    Each job gets a fresh environment and controller, so the outcome does not
    depend on the number of workers.
    """

    def run(job: RolloutJob) -> Episode:
        env = ArmEnv(nominal, sim_config)
        return rollout(make_controller(), job.trajectory, env, job.spec, job.seed, follower)

    if workers <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))
