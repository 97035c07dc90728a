"""Pytest configuration and fixtures."""

import pytest

from invariant.registry import OpRegistry
from invariant.store.memory import MemoryStore

from invariant_osc.config import (
    ControllerConfig,
    EvaluationConfig,
    ExperimentConfig,
    NetworkConfig,
    TrainingConfig,
)
from invariant_osc.dynamics.arm import ArmModel, LinkParams, default_arm
from invariant_osc.ops import pretrain, task_train
from invariant_osc.sim.environment import SimConfig


@pytest.fixture
def registry():
    """Create a fresh OpRegistry instance."""
    registry = OpRegistry()
    registry.clear()
    return registry


@pytest.fixture
def store():
    """Create a fresh MemoryStore instance."""
    return MemoryStore()


@pytest.fixture
def arm():
    """Default three-link desk arm."""
    return default_arm()


@pytest.fixture
def frictionless_arm():
    """Three-link arm with friction and damping removed."""
    return default_arm().with_joint_params(
        viscous_damping=[0.0, 0.0, 0.0], coulomb_friction=[0.0, 0.0, 0.0]
    )


@pytest.fixture
def pendulum():
    """One uniform-rod link, frictionless, no armature."""
    return ArmModel(links=(LinkParams(length=1.0, com_offset=0.5, mass=1.0),))


def tiny_config(tmp_path=None, **overrides) -> ExperimentConfig:
    """Experiment small enough for unit tests: short episodes, narrow networks."""
    config = ExperimentConfig(
        seed=0,
        out_dir=str(tmp_path) if tmp_path is not None else "runs",
        sim=SimConfig(sim_dt=0.005, control_dt=0.05, episode_horizon=6, history_steps=2),
        controller=ControllerConfig(
            sweep_kp_range=(50.0, 100.0),
            sweep_kp_points=2,
            sweep_damping_ratios=(1.0,),
            sweep_episodes=1,
        ),
        network=NetworkConfig(
            base_width=6,
            base_depth=1,
            residual_width=6,
            residual_depth=1,
            encoder_width=6,
            encoder_depth=2,
            latent_dim=2,
        ),
        training=TrainingConfig(
            batch_size=8,
            steps_per_round=1,
            replay_episodes=10,
            pretrain_rounds=1,
            finetune_rounds=1,
            episodes_per_round=1,
            workers=1,
            adapt_workers=1,
        ),
        evaluation=EvaluationConfig(episodes=1, seed_count=1),
    )
    return config.with_overrides(**overrides) if overrides else config


@pytest.fixture
def tiny(tmp_path):
    """Tiny ExperimentConfig writing under a temporary directory."""
    return tiny_config(tmp_path)


@pytest.fixture(scope="session")
def pretrained():
    """Base-only TrainingArtifact from one tiny pretraining round."""
    return pretrain(tiny_config(), 0)


@pytest.fixture(scope="session")
def trained(pretrained):
    """Full oscar TrainingArtifact trained from ``pretrained``."""
    return task_train(tiny_config(), pretrained, "oscar", 0)
