"""Ablation recipe: every variant trained on the train distribution, scored in and out of it."""

from collections.abc import Sequence

from invariant import Node, ref

from invariant_osc.models.composed import VARIANTS
from invariant_osc.recipes.regimes import Graph, evaluation_node, node_id, training_nodes

ABLATION_REGIMES = ("train", "zeroshot")


def ablation_graph(
    seeds: Sequence[int],
    *,
    variants: Sequence[str] = VARIANTS,
    base_key: str | None = None,
    rows: bool = True,
) -> Graph:
    """One pretraining per seed shared by all variants; learned-OSC evaluation only.

    Gains stay at the configured defaults so the rows differ only in the model.

    Returns:
        Graph with ``eval_<regime>_<variant>_s<seed>`` nodes and, with ``rows``,
        an ``ablation_<variant>`` summary row per variant.
    """
    if not seeds:
        raise ValueError("seeds must not be empty")
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")

    graph: Graph = {}
    for variant in variants:
        for seed in seeds:
            trained = training_nodes(graph, seed, variant, base_key=base_key, per_variant=True)
            for regime in ABLATION_REGIMES:
                graph[node_id(f"eval_{regime}", seed, variant)] = evaluation_node(
                    regime, seed, variant, trained, None, ["oscar"]
                )
    if rows:
        graph.update(ablation_rows_graph(seeds, variants))
    return graph


def ablation_rows_graph(seeds: Sequence[int], variants: Sequence[str] = VARIANTS) -> Graph:
    """``ablation_<variant>`` nodes over evaluation ids (graph nodes or context keys)."""
    graph: Graph = {}
    for variant in variants:
        scored = {
            regime: [node_id(f"eval_{regime}", seed, variant) for seed in seeds]
            for regime in ABLATION_REGIMES
        }
        graph[f"ablation_{variant}"] = Node(
            op_name="osc:ablation_row",
            params={
                "variant": variant,
                "train": [ref(e) for e in scored["train"]],
                "zeroshot": [ref(e) for e in scored["zeroshot"]],
            },
            deps=scored["train"] + scored["zeroshot"],
        )
    return graph
