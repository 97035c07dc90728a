"""Runs experiment graphs and writes their results under the output directory.

Cells (one per seed) share nothing but the read-only config and their
checkpoint, so with ``parallel`` they are executed on a thread pool, each with
its own Executor. Files are always written in seed order after every cell finished,
so the output bytes do not depend on scheduling.
"""

import contextlib
import json
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from invariant import Executor, Node, OpRegistry, ref
from invariant.store import DiskStore, MemoryStore

from invariant_osc.artifacts import (
    CheckpointArtifact,
    EvaluationArtifact,
    GainTableArtifact,
    ImageArtifact,
    SummaryArtifact,
    TableArtifact,
    TrainingArtifact,
)
from invariant_osc.config import ExperimentConfig
from invariant_osc.errors import CheckpointError, GradientCheckError
from invariant_osc.harness.checkpoint import load_checkpoint, save_checkpoint
from invariant_osc.harness.metrics import merge_tables, write_csv
from invariant_osc.learn.gradcheck import GradCheckResult, gradient_suite, suite_passed
from invariant_osc.models.composed import VARIANTS
from invariant_osc.recipes import (
    CONFIG,
    ROBUSTNESS_REGIMES,
    ablation_graph,
    ablation_rows_graph,
    node_id,
    regime_graph,
    robustness_graph,
    summary_graph,
)
from invariant_osc.recipes.regimes import training_nodes
from invariant_osc.sim.replay_log import encode_replay, series_csv

logger = logging.getLogger(__name__)

MODEL_KEY = "checkpoint"

Graph = dict[str, Node]


@dataclass
class RunResult:
    out_dir: Path
    files: list[Path] = field(default_factory=list)
    artifacts: dict[str, Any] = field(default_factory=dict)

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.files.append(path)
        return path

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self.files.append(path)
        return path


def make_executor(cache_dir: Path | str | None = None) -> Executor:
    """Executor over all osc:* ops; disk-backed when ``cache_dir`` is given."""
    from invariant_osc import register_core_ops

    registry = OpRegistry()
    register_core_ops(registry)
    store = DiskStore(cache_dir) if cache_dir is not None else MemoryStore(cache="unbounded")
    return Executor(registry, store)


def _context(config: ExperimentConfig, checkpoint: CheckpointArtifact | None) -> dict[str, Any]:
    context: dict[str, Any] = {CONFIG: config}
    if checkpoint is not None:
        context[MODEL_KEY] = checkpoint
    return context


def _execute_cells(
    cells: Sequence[Graph],
    contexts: Sequence[dict[str, Any]],
    *,
    cache_dir: Path | str | None,
    parallel: bool,
) -> dict[str, Any]:
    """Execute independent graphs, cell i in ``contexts[i]``; returns every artifact by id."""

    def run(cell: tuple[Graph, dict[str, Any]]) -> dict[str, Any]:
        graph, context = cell
        return make_executor(cache_dir).execute(graph, list(graph), context=context)

    jobs = list(zip(cells, contexts, strict=True))
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            outputs = list(pool.map(run, jobs))
    else:
        outputs = [run(job) for job in jobs]
    merged: dict[str, Any] = {}
    for result in outputs:
        merged.update(result)
    return merged


def _resolve_checkpoint(
    path: str | None, required: bool, purpose: str
) -> CheckpointArtifact | None:
    if path is None:
        if required:
            raise CheckpointError(
                f"{purpose} needs a checkpoint (--checkpoint or config.checkpoint)"
            )
        return None
    return load_checkpoint(path)


def checkpoint_path(path: Path | str, seed: int) -> Path:
    """``path`` itself, or the seed's ``train_s<seed>.ckpt`` when ``path`` is a directory."""
    path = Path(path)
    return path / f"{node_id('train', seed)}.ckpt" if path.is_dir() else path


def _resolve_seed_checkpoints(
    path: str | None, seeds: Sequence[int], required: bool, purpose: str
) -> dict[int, CheckpointArtifact]:
    """One trained model per seed; a run directory supplies each seed's own checkpoint."""
    if path is None:
        _resolve_checkpoint(None, required, purpose)
        return {}
    files = {seed: checkpoint_path(path, seed) for seed in seeds}
    if len(set(files.values())) < len(seeds):
        logger.warning("%s: seeds %s share the checkpoint %s", purpose, list(seeds), path)
    loaded = {file: load_checkpoint(file) for file in sorted(set(files.values()))}
    return {seed: loaded[file] for seed, file in files.items()}


def _write_training(result: RunResult, artifacts: dict[str, Any]) -> None:
    for name in sorted(artifacts):
        artifact = artifacts[name]
        if isinstance(artifact, TrainingArtifact):
            save_checkpoint(artifact.checkpoint, result.out_dir / f"{name}.ckpt")
            result.files.append(result.out_dir / f"{name}.ckpt")
            result.write_text(f"{name}_loss.csv", artifact.curve.to_csv())


def _write_plots(result: RunResult, artifacts: dict[str, Any]) -> None:
    for name in sorted(artifacts):
        artifact = artifacts[name]
        if isinstance(artifact, ImageArtifact):
            result.write_bytes(f"tracking_{name}.png", artifact.to_png())


def _write_gains(result: RunResult, artifacts: dict[str, Any]) -> None:
    gains = {
        name: artifact.to_dict()["gains"]
        for name, artifact in sorted(artifacts.items())
        if isinstance(artifact, GainTableArtifact)
    }
    if gains:
        result.write_text("gains.json", SummaryArtifact(gains).to_json() + "\n")


def _write_metrics(result: RunResult, evaluations: list[EvaluationArtifact]) -> None:
    table = merge_tables([e.metrics for e in evaluations])
    write_csv(table, result.out_dir / "metrics.csv")
    result.files.append(result.out_dir / "metrics.csv")


def _write_episode_logs(
    result: RunResult, artifacts: dict[str, Any], eval_ids: list[str]
) -> None:
    """First episode of every controller as CSV, and one replay archive per cell."""
    for eval_id in eval_ids:
        traces = artifacts[eval_id].traces
        records = []
        for kind in sorted(traces):
            series = traces[kind]
            result.write_text(f"episodes/{eval_id}_{kind}.csv", series_csv(series))
            records.append(({"controller": kind, "steps": len(series["t"])}, series))
        result.write_bytes(f"episodes/{eval_id}.replay", encode_replay(records))


def run_regime(
    config: ExperimentConfig,
    regime: str,
    *,
    checkpoint: str | None = None,
    cache_dir: Path | str | None = None,
    parallel: bool = False,
    sweep: bool = True,
) -> RunResult:
    """Train (unless a checkpoint is given), sweep gains and evaluate one regime.

    Zero-shot and adapt cells need a trained checkpoint.
    """
    checkpoint = checkpoint or config.checkpoint
    models = _resolve_seed_checkpoints(
        checkpoint, config.seeds, regime in ("zeroshot", "adapt"), f"regime '{regime}'"
    )
    model_key = MODEL_KEY if models else None
    result = RunResult(Path(config.out_dir) / regime)
    logger.info("regime %s: seeds %s, variant %s", regime, config.seeds, config.variant)

    cells = [
        regime_graph(
            regime,
            [seed],
            variant=config.variant,
            model_key=model_key,
            sweep=sweep,
            summary=False,
        )
        for seed in config.seeds
    ]
    contexts = [_context(config, models.get(seed)) for seed in config.seeds]
    artifacts = _execute_cells(cells, contexts, cache_dir=cache_dir, parallel=parallel)

    eval_ids = [node_id("eval", seed) for seed in config.seeds]
    _finish_evaluation(result, artifacts, eval_ids, config, cache_dir)
    logger.info("regime %s: wrote %d files under %s", regime, len(result.files), result.out_dir)
    return result


def _finish_evaluation(
    result: RunResult,
    artifacts: dict[str, Any],
    eval_ids: list[str],
    config: ExperimentConfig,
    cache_dir: Path | str | None,
) -> SummaryArtifact:
    """Summarise ``eval_ids`` and write metrics, summary, checkpoints, gains, plots and logs."""
    summary_context = {key: artifacts[key] for key in eval_ids}
    summary = make_executor(cache_dir).execute(
        summary_graph(eval_ids), ["summary"], context=summary_context
    )["summary"]
    artifacts["summary"] = summary
    result.artifacts = artifacts

    _write_metrics(result, [artifacts[key] for key in eval_ids])
    result.write_text("summary.json", summary.to_json() + "\n")
    _write_training(result, artifacts)
    _write_gains(result, artifacts)
    _write_plots(result, artifacts)
    if config.evaluation.log_episodes:
        _write_episode_logs(result, artifacts, eval_ids)
    return summary


DEGRADATION_COLUMNS = ("variant", "controller", "seed", "degradation_mm")


def degradation_table(summary: SummaryArtifact) -> TableArtifact:
    """One row per (variant, controller, seed) of the summary's ``degradation_mm``."""
    records = [
        {"variant": variant, "controller": controller, "seed": int(seed), "degradation_mm": value}
        for variant, controllers in sorted(summary.doc["degradation_mm"].items())
        for controller, entry in sorted(controllers.items())
        for seed, value in sorted(entry["per_seed"].items(), key=lambda kv: int(kv[0]))
    ]
    return TableArtifact.from_records(DEGRADATION_COLUMNS, records)


def run_robustness(
    config: ExperimentConfig,
    *,
    checkpoint: str | None = None,
    cache_dir: Path | str | None = None,
    parallel: bool = False,
    sweep: bool = True,
) -> RunResult:
    """Train and zero-shot evaluation per seed with one model and one gain table.

    Without a checkpoint each seed trains its own model. A checkpoint
    directory from an earlier ``train`` run gives every seed its own
    ``train_s<seed>.ckpt``; a single file is shared by all seeds.
    """
    checkpoint = checkpoint or config.checkpoint
    models = _resolve_seed_checkpoints(checkpoint, config.seeds, False, "robustness")
    model_key = MODEL_KEY if models else None
    result = RunResult(Path(config.out_dir) / "robustness")
    logger.info("robustness: seeds %s, variant %s", config.seeds, config.variant)

    cells = [
        robustness_graph(
            [seed], variant=config.variant, model_key=model_key, sweep=sweep, summary=False
        )
        for seed in config.seeds
    ]
    contexts = [_context(config, models.get(seed)) for seed in config.seeds]
    artifacts = _execute_cells(cells, contexts, cache_dir=cache_dir, parallel=parallel)

    eval_ids = [
        node_id("eval", seed, regime) for seed in config.seeds for regime in ROBUSTNESS_REGIMES
    ]
    summary = _finish_evaluation(result, artifacts, eval_ids, config, cache_dir)
    result.write_text("degradation.csv", degradation_table(summary).to_csv())
    for controller, entry in sorted(summary.doc["degradation_mm"].get(config.variant, {}).items()):
        logger.info("robustness %s: degradation %.2f mm", controller, entry["mean"])
    return result


def run_pretrain(
    config: ExperimentConfig, *, cache_dir: Path | str | None = None, parallel: bool = False
) -> RunResult:
    cells = [
        {
            node_id("pretrain", seed): Node(
                op_name="osc:pretrain",
                params={"config": ref(CONFIG), "seed": seed},
                deps=[CONFIG],
            )
        }
        for seed in config.seeds
    ]
    result = RunResult(Path(config.out_dir) / "pretrain")
    result.artifacts = _execute_cells(
        cells, [_context(config, None)] * len(cells), cache_dir=cache_dir, parallel=parallel
    )
    _write_training(result, result.artifacts)
    return result


def run_sweep(
    config: ExperimentConfig,
    *,
    checkpoint: str | None = None,
    cache_dir: Path | str | None = None,
    parallel: bool = False,
) -> RunResult:
    """Gain sweep only; trains a model per seed unless a checkpoint is given."""
    checkpoint = checkpoint or config.checkpoint
    models = _resolve_seed_checkpoints(checkpoint, config.seeds, False, "sweep")
    cells = []
    for seed in config.seeds:
        graph: Graph = {}
        trained = MODEL_KEY if models else training_nodes(graph, seed, config.variant)
        graph[node_id("gains", seed)] = Node(
            op_name="osc:sweep_gains",
            params={
                "config": ref(CONFIG),
                "seed": seed,
                "model": ref(trained),
                "variant": config.variant,
            },
            deps=[CONFIG, trained],
        )
        cells.append(graph)
    result = RunResult(Path(config.out_dir) / "sweep")
    result.artifacts = _execute_cells(
        cells,
        [_context(config, models.get(seed)) for seed in config.seeds],
        cache_dir=cache_dir,
        parallel=parallel,
    )
    _write_training(result, result.artifacts)
    _write_gains(result, result.artifacts)
    return result


ABLATION_COLUMNS = (
    "variant",
    "train_rmse_mm",
    "train_rmse_std",
    "zeroshot_rmse_mm",
    "zeroshot_rmse_std",
    "degradation_mm",
    "degradation_std",
)


def ablation_table(rows: Sequence[SummaryArtifact]) -> TableArtifact:
    records = []
    for row in rows:
        doc = row.doc
        records.append(
            {
                "variant": doc["variant"],
                "train_rmse_mm": doc["train_rmse_mm"]["mean"],
                "train_rmse_std": doc["train_rmse_mm"]["std"],
                "zeroshot_rmse_mm": doc["zeroshot_rmse_mm"]["mean"],
                "zeroshot_rmse_std": doc["zeroshot_rmse_mm"]["std"],
                "degradation_mm": doc["degradation_mm"]["mean"],
                "degradation_std": doc["degradation_mm"]["std"],
            }
        )
    return TableArtifact.from_records(ABLATION_COLUMNS, records)


def run_ablation(
    config: ExperimentConfig,
    *,
    checkpoint: str | None = None,
    variants: Sequence[str] | None = None,
    cache_dir: Path | str | None = None,
    parallel: bool = False,
) -> RunResult:
    """Every variant on every seed; ``checkpoint`` is a shared pretrained base."""
    variants = tuple(variants or VARIANTS)
    checkpoint = checkpoint or config.checkpoint
    base = _resolve_checkpoint(checkpoint, False, "ablation")
    base_key = MODEL_KEY if base is not None else None
    cells = [
        ablation_graph([seed], variants=variants, base_key=base_key, rows=False)
        for seed in config.seeds
    ]
    artifacts = _execute_cells(
        cells, [_context(config, base)] * len(cells), cache_dir=cache_dir, parallel=parallel
    )

    rows_graph = ablation_rows_graph(config.seeds, variants)
    eval_ids = sorted({dep for node in rows_graph.values() for dep in node.deps})
    rows = make_executor(cache_dir).execute(
        rows_graph, list(rows_graph), context={key: artifacts[key] for key in eval_ids}
    )
    artifacts.update(rows)

    result = RunResult(Path(config.out_dir) / "ablation", artifacts=artifacts)
    ordered = [rows[f"ablation_{v}"] for v in variants]
    result.write_text("ablation.csv", ablation_table(ordered).to_csv())
    result.write_text(
        "ablation.json", SummaryArtifact({"rows": [r.doc for r in ordered]}).to_json() + "\n"
    )
    _write_metrics(result, [artifacts[key] for key in eval_ids])
    _write_training(result, artifacts)
    for row in ordered:
        logger.info(
            "ablation %s: train %.2f mm, zeroshot %.2f mm, degradation %.2f mm",
            row.doc["variant"],
            row.doc["train_rmse_mm"]["mean"],
            row.doc["zeroshot_rmse_mm"]["mean"],
            row.doc["degradation_mm"]["mean"],
        )
    return result


def run_gradcheck(
    config: ExperimentConfig,
    *,
    samples: int = 100,
    fault: Callable[[], Any] | None = None,
) -> list[GradCheckResult]:
    """Gradient suite at the configured network sizes; raises GradientCheckError on failure.

    ``fault`` is an optional context-manager factory wrapped around the suite.
    """
    scope = fault() if fault is not None else contextlib.nullcontext()
    with scope:
        results = gradient_suite(
            config.arm.dof,
            config.sim.history_steps,
            samples=samples,
            seed=config.seed,
            network_options=config.network.model_options(),
        )
    out = RunResult(Path(config.out_dir) / "gradcheck")
    out.write_text("gradcheck.json", json.dumps([r.to_dict() for r in results], indent=2) + "\n")
    if not suite_passed(results):
        failed = [r.name for r in results if not r.passed]
        raise GradientCheckError(f"gradient checks failed: {', '.join(failed)}")
    return results
