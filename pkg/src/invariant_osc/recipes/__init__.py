"""Experiment recipes: regime cells, train/zero-shot pairs and the ablation grid."""

from invariant_osc.recipes.ablation import ABLATION_REGIMES, ablation_graph, ablation_rows_graph
from invariant_osc.recipes.regimes import (
    CONFIG,
    ROBUSTNESS_REGIMES,
    node_id,
    regime_graph,
    robustness_graph,
    summary_graph,
)

__all__ = [
    "ABLATION_REGIMES",
    "CONFIG",
    "ROBUSTNESS_REGIMES",
    "ablation_graph",
    "ablation_rows_graph",
    "node_id",
    "regime_graph",
    "robustness_graph",
    "summary_graph",
]
