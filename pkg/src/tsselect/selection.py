"""Score a model pool under a split plan, aggregate across folds, pick a model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import EmbeddedDataset
from .learners import LearnerSpec, fit, predict
from .metrics import rmse
from .resampling import SplitPlan

log = logging.getLogger(__name__)

AGGREGATIONS = ("mean-error", "avg-rank")


class SelectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class FoldScoreMatrix:
    """Per-fold RMSE, rows = models in registration order, columns = plan iterations."""

    scores: np.ndarray
    metric: str = "RMSE"
    failed: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        if scores.ndim != 2 or scores.size == 0:
            raise ValueError(f"score matrix must be a non-empty 2-D array, got shape {scores.shape}")
        if np.isnan(scores).any() or (scores < 0).any():
            raise ValueError("scores must be non-negative (inf marks a failed fit)")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n_models(self) -> int:
        return self.scores.shape[0]

    @property
    def n_iterations(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class SelectionOutcome:
    chosen: LearnerSpec
    aggregated: np.ndarray
    aggregation: str
    estimator: str
    index: int


def evaluate_pool(
    pool: Sequence[LearnerSpec], data: EmbeddedDataset, plan: SplitPlan
) -> FoldScoreMatrix:
    """RMSE of each model fitted on each iteration's train rows, scored on its test rows."""
    n = len(data)
    if plan.iterations and plan.max_index() >= n:
        raise IndexError(f"plan {plan.method} indexes row {plan.max_index()} of {n}")
    X, y = data.features, data.targets
    scores = np.empty((len(pool), len(plan)))
    failed = []
    for i, it in enumerate(plan.iterations):
        X_tr, y_tr = X[it.train], y[it.train]
        X_te, y_te = X[it.test], y[it.test]
        for m, spec in enumerate(pool):
            try:
                scores[m, i] = rmse(predict(fit(spec, X_tr, y_tr), X_te), y_te)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                log.warning("%s failed on %s iteration %d: %s", spec.display_name, plan.method, i, exc)
                scores[m, i] = np.inf
                failed.append((m, i))
    return FoldScoreMatrix(scores, failed=tuple(failed))


def aggregate_mean(matrix: FoldScoreMatrix) -> np.ndarray:
    return matrix.scores.mean(axis=1)


def average_ranks(values) -> np.ndarray:
    """Ascending ranks from 1; tied values share the mean of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v))
    sorted_v = v[order]
    start = 0
    while start < len(v):
        stop = start + 1
        while stop < len(v) and sorted_v[stop] == sorted_v[start]:
            stop += 1
        ranks[order[start:stop]] = (start + 1 + stop) / 2.0
        start = stop
    return ranks


def rank_matrix(matrix: FoldScoreMatrix) -> np.ndarray:
    return np.column_stack([average_ranks(col) for col in matrix.scores.T])


def aggregate_rank(matrix: FoldScoreMatrix) -> np.ndarray:
    """Mean over iterations of each model's within-iteration rank."""
    return rank_matrix(matrix).mean(axis=1)


AGGREGATORS = {"mean-error": aggregate_mean, "avg-rank": aggregate_rank}


def aggregate(matrix: FoldScoreMatrix, aggregation: str) -> np.ndarray:
    try:
        return AGGREGATORS[aggregation](matrix)
    except KeyError:
        raise ValueError(f"unknown aggregation {aggregation!r}; expected one of {AGGREGATIONS}") from None


def select(
    aggregated, pool: Sequence[LearnerSpec], aggregation: str = "mean-error", estimator: str = ""
) -> SelectionOutcome:
    """argmin of the aggregated scores; the lowest registration index wins ties."""
    scores = np.asarray(aggregated, dtype=float)
    if len(scores) != len(pool):
        raise ValueError(f"{len(scores)} scores for a pool of {len(pool)}")
    if not np.isfinite(scores).any():
        raise SelectionError(f"{estimator or 'selection'}: no viable model (all scores infinite)")
    # np.argmin returns the first minimum
    idx = int(np.argmin(scores))
    return SelectionOutcome(
        chosen=pool[idx], aggregated=scores, aggregation=aggregation, estimator=estimator, index=idx
    )
