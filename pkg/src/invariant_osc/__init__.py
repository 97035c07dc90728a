"""Invariant OSC: learned mass matrices for operational space control, run as Invariant graphs."""

from importlib.metadata import version

from invariant.registry import OpRegistry

from invariant_osc.recipes import ablation_graph, regime_graph

__version__ = version("invariant-osc")

__all__ = ["ablation_graph", "regime_graph", "register_core_ops", "__version__"]


def register_core_ops(registry: OpRegistry) -> None:
    """Register all experiment operations in the OpRegistry.

    Args:
        registry: The OpRegistry instance to register operations in.
    """
    from invariant_osc.ops import (
        ablation_row,
        evaluate,
        finetune,
        pretrain,
        render_tracking,
        summarize,
        sweep_gains,
        task_train,
    )

    ops_to_register = [
        ("osc:pretrain", pretrain),
        ("osc:task_train", task_train),
        ("osc:finetune", finetune),
        ("osc:sweep_gains", sweep_gains),
        ("osc:evaluate", evaluate),
        ("osc:summarize", summarize),
        ("osc:ablation_row", ablation_row),
        ("osc:render_tracking", render_tracking),
    ]

    for name, op in ops_to_register:
        if not registry.has(name):
            registry.register(name, op)
