"""Experiment operations for Invariant OSC."""

from invariant_osc.ops.ablation_row import ablation_row
from invariant_osc.ops.evaluate import evaluate
from invariant_osc.ops.finetune import finetune
from invariant_osc.ops.pretrain import pretrain
from invariant_osc.ops.render_tracking import render_tracking
from invariant_osc.ops.summarize import summarize
from invariant_osc.ops.sweep_gains import sweep_gains
from invariant_osc.ops.task_train import task_train

__all__ = [
    "ablation_row",
    "evaluate",
    "finetune",
    "pretrain",
    "render_tracking",
    "summarize",
    "sweep_gains",
    "task_train",
]
