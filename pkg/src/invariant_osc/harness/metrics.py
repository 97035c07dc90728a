"""Per-episode metrics rows, CSV output and seed-level summaries.

Units are fixed: tracking RMSE in millimetres, torques in N·m.
"""

import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from invariant_osc.artifacts import Cell, TableArtifact
from invariant_osc.errors import NonFiniteError
from invariant_osc.sim.rollout import Episode


@dataclass(frozen=True)
class MetricsRow:
    regime: str
    variant: str
    seed: int
    controller: str
    episode: int
    rmse_mm: float
    mean_abs_tau: float
    guard_activations: int = 0
    guard_evaluations: int = 0
    truncated: int = 0
    loss_inverse: float = math.nan
    loss_forward: float = math.nan
    loss_energy: float = math.nan

    @classmethod
    def from_episode(
        cls,
        episode: Episode,
        *,
        regime: str,
        variant: str,
        seed: int,
        controller: str,
        index: int,
        guard: tuple[int, int] = (0, 0),
        losses: dict[str, float] | None = None,
    ) -> "MetricsRow":
        rmse = episode.rmse_mm
        if not math.isfinite(rmse):
            raise NonFiniteError(
                f"{controller} episode {index} (seed {episode.seed}) has no finite tracking error"
            )
        losses = losses or {}
        return cls(
            regime=regime,
            variant=variant,
            seed=seed,
            controller=controller,
            episode=index,
            rmse_mm=rmse,
            mean_abs_tau=episode.mean_abs_tau,
            guard_activations=guard[0],
            guard_evaluations=guard[1],
            truncated=int(episode.truncated),
            loss_inverse=losses.get("inverse", math.nan),
            loss_forward=losses.get("forward", math.nan),
            loss_energy=losses.get("energy", math.nan),
        )


METRICS_COLUMNS = tuple(f.name for f in fields(MetricsRow))


def metrics_table(rows: Iterable[MetricsRow]) -> TableArtifact:
    return TableArtifact.from_records(METRICS_COLUMNS, (asdict(r) for r in rows))


def rows_from_table(table: TableArtifact) -> list[MetricsRow]:
    if table.columns != METRICS_COLUMNS:
        raise ValueError(f"metrics table columns must be {METRICS_COLUMNS}, got {table.columns}")
    return [MetricsRow(**record) for record in table.records()]


def merge_tables(tables: Sequence[TableArtifact]) -> TableArtifact:
    """Concatenate tables sharing one schema, in the given order."""
    if not tables:
        raise ValueError("merge_tables needs at least one table")
    columns = tables[0].columns
    rows: list[Sequence[Cell]] = []
    for table in tables:
        if table.columns != columns:
            raise ValueError(f"cannot merge tables with columns {table.columns} and {columns}")
        rows.extend(table.rows)
    return TableArtifact(columns, rows)


def write_csv(table: TableArtifact, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table.to_csv(), encoding="utf-8")
    return path


def _mean_std(values: Sequence[float]) -> dict[str, float]:
    array = np.asarray(values, dtype=np.float64)
    return {"mean": float(np.mean(array)), "std": float(np.std(array))}


def summarize(rows: Iterable[MetricsRow]) -> dict[str, Any]:
    """Mean ± std over seeds of each seed's mean, per (regime, variant, controller)."""
    cells: dict[tuple[str, str, str], dict[int, list[MetricsRow]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for row in rows:
        cells[(row.regime, row.variant, row.controller)][row.seed].append(row)

    summary: dict[str, Any] = {}
    for (regime, variant, controller), by_seed in sorted(cells.items()):
        seeds = sorted(by_seed)
        rmse = [float(np.mean([r.rmse_mm for r in by_seed[s]])) for s in seeds]
        tau = [float(np.mean([r.mean_abs_tau for r in by_seed[s]])) for s in seeds]
        activations = sum(r.guard_activations for s in seeds for r in by_seed[s])
        evaluations = sum(r.guard_evaluations for s in seeds for r in by_seed[s])
        summary.setdefault(regime, {}).setdefault(variant, {})[controller] = {
            "seeds": seeds,
            "episodes": sum(len(by_seed[s]) for s in seeds),
            "truncated": sum(r.truncated for s in seeds for r in by_seed[s]),
            "rmse_mm": _mean_std(rmse),
            "rmse_mm_per_seed": rmse,
            "mean_abs_tau": _mean_std(tau),
            "guard_rate": activations / evaluations if evaluations else 0.0,
        }
    return summary


def seed_means(rows: Iterable[MetricsRow], controller: str) -> dict[int, float]:
    by_seed: dict[int, list[float]] = defaultdict(list)
    for row in rows:
        if row.controller == controller:
            by_seed[row.seed].append(row.rmse_mm)
    return {seed: float(np.mean(values)) for seed, values in sorted(by_seed.items())}


def degradation(train: dict[int, float], ood: dict[int, float]) -> dict[int, float]:
    """Per-seed zero-shot degradation in mm: OOD RMSE minus train RMSE."""
    return {seed: ood[seed] - train[seed] for seed in sorted(train) if seed in ood}


def paired_win_rate(rows: Iterable[MetricsRow], better: str, worse: str) -> float:
    """Fraction of (seed, episode) pairs where ``better`` tracks strictly more closely."""
    scores: dict[tuple[int, int], dict[str, float]] = defaultdict(dict)
    for row in rows:
        if row.controller in (better, worse):
            scores[(row.seed, row.episode)][row.controller] = row.rmse_mm
    pairs = [s for s in scores.values() if better in s and worse in s]
    if not pairs:
        return math.nan
    return sum(s[better] < s[worse] for s in pairs) / len(pairs)
