"""Experiment harness: metrics, checkpoints, graph runners and the CLI."""

from invariant_osc.harness.checkpoint import (
    checkpoint_from_model,
    load_checkpoint,
    save_checkpoint,
)
from invariant_osc.harness.metrics import MetricsRow, metrics_table, summarize
from invariant_osc.harness.runner import (
    RunResult,
    make_executor,
    run_ablation,
    run_gradcheck,
    run_pretrain,
    run_regime,
    run_robustness,
    run_sweep,
)

__all__ = [
    "MetricsRow",
    "RunResult",
    "checkpoint_from_model",
    "load_checkpoint",
    "make_executor",
    "metrics_table",
    "run_ablation",
    "run_gradcheck",
    "run_pretrain",
    "run_regime",
    "run_robustness",
    "run_sweep",
    "save_checkpoint",
    "summarize",
]
