"""Regime recipe: pretrain -> task training -> gain sweep -> evaluation -> summary.

Every node reads the ExperimentConfig from the context key ``"config"``. A
trained model supplied from outside (``--checkpoint``) enters through another
context key and replaces the training nodes.
"""

from collections.abc import Sequence

from invariant import Node, ref

from invariant_osc.config import REGIMES
from invariant_osc.control.controllers import CONTROLLER_KINDS
from invariant_osc.models.composed import VARIANTS

CONFIG = "config"

Graph = dict[str, Node]


def node_id(kind: str, seed: int, variant: str | None = None) -> str:
    return f"{kind}_{variant}_s{seed}" if variant else f"{kind}_s{seed}"


def _param_node(op_name: str, params: dict, deps: list[str]) -> Node:
    return Node(op_name=op_name, params=params, deps=[CONFIG, *deps])


def training_nodes(
    graph: Graph,
    seed: int,
    variant: str = "oscar",
    *,
    base_key: str | None = None,
    per_variant: bool = False,
) -> str:
    """Add pretrain (unless ``base_key``) and task_train nodes; returns the trained node id."""
    deps: list[str] = []
    base = None
    if variant != "no_residual_no_pretrain":
        if base_key is None:
            base_key = node_id("pretrain", seed)
            graph.setdefault(
                base_key,
                _param_node("osc:pretrain", {"config": ref(CONFIG), "seed": seed}, []),
            )
        deps, base = [base_key], ref(base_key)
    trained = node_id("train", seed, variant if per_variant else None)
    graph[trained] = _param_node(
        "osc:task_train",
        {"config": ref(CONFIG), "base": base, "variant": variant, "seed": seed},
        deps,
    )
    return trained


def evaluation_node(
    regime: str,
    seed: int,
    variant: str,
    model: str | None,
    gains: str | None = None,
    controllers: Sequence[str] | None = None,
) -> Node:
    deps = [d for d in (model, gains) if d is not None]
    return _param_node(
        "osc:evaluate",
        {
            "config": ref(CONFIG),
            "regime": regime,
            "seed": seed,
            "variant": variant,
            "model": ref(model) if model else None,
            "gains": ref(gains) if gains else None,
            "controllers": list(controllers) if controllers is not None else None,
        },
        deps,
    )


def regime_graph(
    regime: str,
    seeds: Sequence[int],
    *,
    variant: str = "oscar",
    model_key: str | None = None,
    sweep: bool = True,
    render: bool = True,
    summary: bool = True,
) -> Graph:
    """Build the graph for one regime over ``seeds``.

    Args:
        regime: "train", "zeroshot" or "adapt".
        seeds: Evaluation seeds; each gets its own training and evaluation chain.
        variant: Model variant under test.
        model_key: Context key of a trained model; when None the graph trains one.
        sweep: Add a gain sweep per seed and evaluate with the winners.
        render: Add a tracking plot per seed.
        summary: Add the ``summary`` node over all seeds.

    Returns:
        Graph with nodes ``eval_s<seed>``, ``summary`` and, as enabled,
        ``pretrain_s*``, ``train_s*``, ``adapt_s*``, ``gains_s*`` and ``plot_s*``.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not seeds:
        raise ValueError("seeds must not be empty")

    graph: Graph = {}
    evaluations = []
    for seed in seeds:
        model = model_key or training_nodes(graph, seed, variant)
        gains = None
        if sweep:
            gains = node_id("gains", seed)
            graph[gains] = _param_node(
                "osc:sweep_gains",
                {"config": ref(CONFIG), "seed": seed, "model": ref(model), "variant": variant},
                [model],
            )
        if regime == "adapt":
            adapted = node_id("adapt", seed)
            graph[adapted] = _param_node(
                "osc:finetune",
                {"config": ref(CONFIG), "base": ref(model), "variant": variant, "seed": seed},
                [model],
            )
            model = adapted
        evaluated = node_id("eval", seed)
        graph[evaluated] = evaluation_node(regime, seed, variant, model, gains, CONTROLLER_KINDS)
        evaluations.append(evaluated)
        if render:
            graph[node_id("plot", seed)] = Node(
                op_name="osc:render_tracking",
                params={"evaluation": ref(evaluated)},
                deps=[evaluated],
            )

    if summary:
        graph.update(summary_graph(evaluations))
    return graph


def summary_graph(evaluations: Sequence[str]) -> Graph:
    """A lone ``summary`` node over evaluation ids (graph nodes or context keys)."""
    return {
        "summary": Node(
            op_name="osc:summarize",
            params={"evaluations": [ref(e) for e in evaluations]},
            deps=list(evaluations),
        )
    }


ROBUSTNESS_REGIMES = ("train", "zeroshot")


def robustness_graph(
    seeds: Sequence[int],
    *,
    variant: str = "oscar",
    model_key: str | None = None,
    sweep: bool = True,
    summary: bool = True,
) -> Graph:
    """Train and zero-shot evaluations of one model and one gain table per seed.

    Both cells of a seed share the trained model (or ``model_key``) and the
    sweep winners, so the summary's ``degradation_mm`` compares like with like.
    Evaluation nodes are ``eval_train_s<seed>`` and ``eval_zeroshot_s<seed>``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not seeds:
        raise ValueError("seeds must not be empty")

    graph: Graph = {}
    evaluations = []
    for seed in seeds:
        model = model_key or training_nodes(graph, seed, variant)
        gains = None
        if sweep:
            gains = node_id("gains", seed)
            graph[gains] = _param_node(
                "osc:sweep_gains",
                {"config": ref(CONFIG), "seed": seed, "model": ref(model), "variant": variant},
                [model],
            )
        for regime in ROBUSTNESS_REGIMES:
            evaluated = node_id("eval", seed, regime)
            graph[evaluated] = evaluation_node(
                regime, seed, variant, model, gains, CONTROLLER_KINDS
            )
            evaluations.append(evaluated)

    if summary:
        graph.update(summary_graph(evaluations))
    return graph
