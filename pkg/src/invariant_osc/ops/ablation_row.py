"""osc:ablation_row operation - train score, zero-shot score and degradation of one variant."""

import numpy as np
from invariant.protocol import ICacheable

from invariant_osc.artifacts import EvaluationArtifact, SummaryArtifact
from invariant_osc.harness.metrics import degradation, rows_from_table, seed_means
from invariant_osc.models.composed import VARIANTS


def _learned_seed_means(evaluations: list[EvaluationArtifact], name: str) -> dict[int, float]:
    if not isinstance(evaluations, list) or not evaluations:
        raise ValueError(f"{name} must be a non-empty list of EvaluationArtifact")
    rows = []
    for evaluation in evaluations:
        if not isinstance(evaluation, EvaluationArtifact):
            raise ValueError(f"{name} must contain EvaluationArtifact, got {type(evaluation)}")
        rows.extend(rows_from_table(evaluation.metrics))
    means = seed_means(rows, "oscar")
    if not means:
        raise ValueError(f"{name} has no rows for the learned controller")
    return means


def ablation_row(
    variant: str,
    train: list[EvaluationArtifact],
    zeroshot: list[EvaluationArtifact],
) -> ICacheable:
    """Compare one variant's learned-OSC tracking in and out of distribution.

    Args:
        variant: Ablation variant name.
        train: One train-regime evaluation per seed.
        zeroshot: One zeroshot-regime evaluation per seed.

    Returns:
        SummaryArtifact with RMSE mean/std per regime and per-seed degradation (mm).
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    train_means = _learned_seed_means(train, "train")
    ood_means = _learned_seed_means(zeroshot, "zeroshot")
    per_seed = degradation(train_means, ood_means)
    if not per_seed:
        raise ValueError(
            f"train seeds {sorted(train_means)} and zeroshot seeds {sorted(ood_means)} "
            "do not overlap"
        )

    def stats(values: dict[int, float]) -> dict[str, float]:
        array = np.array(list(values.values()))
        return {"mean": float(np.mean(array)), "std": float(np.std(array))}

    return SummaryArtifact(
        {
            "variant": variant,
            "train_rmse_mm": stats(train_means),
            "zeroshot_rmse_mm": stats(ood_means),
            "degradation_mm": {
                "per_seed": {str(seed): value for seed, value in per_seed.items()},
                **stats(per_seed),
            },
        }
    )
