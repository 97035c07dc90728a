"""Simulation environment, trajectories, rollouts and episode logs."""

from invariant_osc.sim.environment import ArmEnv, RandomizationSpec, SimConfig
from invariant_osc.sim.rollout import Episode, RolloutJob, Transition, collect_episodes, rollout
from invariant_osc.sim.trajectory import TRAJECTORY_KINDS, TrajectorySpec, sample_trajectory

__all__ = [
    "TRAJECTORY_KINDS",
    "ArmEnv",
    "Episode",
    "RandomizationSpec",
    "RolloutJob",
    "SimConfig",
    "TrajectorySpec",
    "Transition",
    "collect_episodes",
    "rollout",
    "sample_trajectory",
]
