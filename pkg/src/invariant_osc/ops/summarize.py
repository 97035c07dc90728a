"""osc:summarize operation - mean ± std over seeds for a set of regime cells."""

from collections import defaultdict

import numpy as np
from invariant.protocol import ICacheable

from invariant_osc.artifacts import EvaluationArtifact, SummaryArtifact
from invariant_osc.harness.metrics import (
    MetricsRow,
    degradation,
    paired_win_rate,
    rows_from_table,
    seed_means,
    summarize as summarize_rows,
)


def _evaluation_rows(evaluations: list[EvaluationArtifact]) -> list[MetricsRow]:
    if not isinstance(evaluations, list) or not evaluations:
        raise ValueError("evaluations must be a non-empty list")
    rows: list[MetricsRow] = []
    for i, evaluation in enumerate(evaluations):
        if not isinstance(evaluation, EvaluationArtifact):
            raise ValueError(f"evaluations[{i}] must be EvaluationArtifact, got {type(evaluation)}")
        rows.extend(rows_from_table(evaluation.metrics))
    return rows


def summarize(evaluations: list[EvaluationArtifact]) -> ICacheable:
    """Aggregate regime cells into one summary document.

    The document holds per-cell statistics (``cells[regime][variant][controller]``),
    the paired analytical-vs-identity win rate per cell and, when both train and
    zeroshot cells are present, the per-seed zero-shot degradation in mm.
    """
    rows = _evaluation_rows(evaluations)
    by_cell: dict[tuple[str, str], list[MetricsRow]] = defaultdict(list)
    for row in rows:
        by_cell[(row.regime, row.variant)].append(row)

    brackets = {
        f"{regime}/{variant}": paired_win_rate(cell, "analytical_osc", "identity_osc")
        for (regime, variant), cell in sorted(by_cell.items())
    }

    degradations: dict[str, dict[str, object]] = {}
    variants = sorted({variant for _, variant in by_cell})
    for variant in variants:
        train, ood = by_cell.get(("train", variant)), by_cell.get(("zeroshot", variant))
        if not train or not ood:
            continue
        for controller in sorted({r.controller for r in train} & {r.controller for r in ood}):
            per_seed = degradation(seed_means(train, controller), seed_means(ood, controller))
            if per_seed:
                degradations.setdefault(variant, {})[controller] = {
                    "per_seed": {str(seed): value for seed, value in per_seed.items()},
                    "mean": float(np.mean(list(per_seed.values()))),
                }

    return SummaryArtifact(
        {
            "units": {"rmse": "mm", "torque": "N*m"},
            "episodes": len(rows),
            "cells": summarize_rows(rows),
            "analytical_beats_identity": brackets,
            "degradation_mm": degradations,
        }
    )
