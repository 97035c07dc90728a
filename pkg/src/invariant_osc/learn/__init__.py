"""Losses, optimiser, replay and the two-phase training loop."""

from invariant_osc.learn.gradcheck import GradCheckResult, gradient_suite, suite_passed
from invariant_osc.learn.losses import TERMS, Batch, LossWeights, dynamics_loss, loss_and_gradients
from invariant_osc.learn.optim import Adam, OptimizerState
from invariant_osc.learn.replay import ReplayBuffer
from invariant_osc.learn.training import (
    TrainingRun,
    episode_jobs,
    finetune,
    make_controller,
    make_follower,
    new_model,
    prepare_variant,
    pretrain,
    task_train,
)

__all__ = [
    "Adam",
    "Batch",
    "GradCheckResult",
    "LossWeights",
    "OptimizerState",
    "ReplayBuffer",
    "TERMS",
    "TrainingRun",
    "dynamics_loss",
    "episode_jobs",
    "finetune",
    "gradient_suite",
    "loss_and_gradients",
    "make_controller",
    "make_follower",
    "new_model",
    "prepare_variant",
    "pretrain",
    "suite_passed",
    "task_train",
]
