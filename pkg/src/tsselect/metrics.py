"""Test-set oracle, percentage loss of a selection, and cross-series summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Partition
from .learners import LearnerSpec, fit, predict

TIE_RTOL = 1e-12


class MetricError(ValueError):
    pass


class OracleError(RuntimeError):
    pass


class UndefinedLossError(ArithmeticError):
    """The oracle is perfect (RMSE 0) but the selected model is not."""


def rmse(predictions, actuals) -> float:
    pred = np.asarray(predictions, dtype=float)
    act = np.asarray(actuals, dtype=float)
    if pred.ndim != 1 or pred.shape != act.shape:
        raise MetricError(f"shape mismatch: predictions {pred.shape} vs actuals {act.shape}")
    if pred.size == 0:
        raise MetricError("rmse of empty sequences")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(act))):
        raise MetricError("non-finite values in rmse input")
    return float(np.sqrt(np.mean((pred - act) ** 2)))


@dataclass(frozen=True)
class OracleResult:
    per_model_test_rmse: np.ndarray
    best: LearnerSpec
    best_rmse: float


def score_on_test(pool: Sequence[LearnerSpec], part: Partition) -> np.ndarray:
    """Fit each model on the full estimation set and score it on the test set.

    Failed fits score ``inf``.
    """
    est, test = part.estimation, part.test
    out = np.full(len(pool), np.inf)
    for m, spec in enumerate(pool):
        try:
            model = fit(spec, est.features, est.targets)
            out[m] = rmse(predict(model, test.features), test.targets)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            pass
    return out


def oracle_best(pool: Sequence[LearnerSpec], part: Partition, scores=None) -> OracleResult:
    """A*: the pool member with the lowest test RMSE (earliest registration wins ties)."""
    if not pool:
        raise OracleError("empty pool")
    if scores is None:
        scores = score_on_test(pool, part)
    scores = np.asarray(scores, dtype=float)
    if not np.isfinite(scores).any():
        raise OracleError("every model failed on the estimation set")
    best = int(np.argmin(scores))
    return OracleResult(per_model_test_rmse=scores, best=pool[best], best_rmse=float(scores[best]))


def is_tie(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))


def loss_of_estimator(rmse_selected: float, rmse_star: float) -> float:
    """Percentage excess test RMSE of the selected model over the oracle."""
    if rmse_star < 0 or rmse_selected < 0:
        raise MetricError("RMSE values must be non-negative")
    if is_tie(rmse_selected, rmse_star):
        return 0.0
    if rmse_star == 0.0:
        raise UndefinedLossError(
            f"oracle RMSE is 0 but selected RMSE is {rmse_selected}; percentage loss undefined"
        )
    if rmse_selected < rmse_star:
        raise MetricError(
            f"selected RMSE {rmse_selected} beats the oracle {rmse_star}; oracle is not a minimum"
        )
    return (rmse_selected - rmse_star) / rmse_star * 100.0


@dataclass(frozen=True)
class SelectionQuality:
    estimator: str
    aggregation: str
    loss_percent: float | None
    hit: bool

    @classmethod
    def from_rmse(cls, estimator: str, aggregation: str, rmse_selected: float, rmse_star: float):
        try:
            loss = loss_of_estimator(rmse_selected, rmse_star)
        except UndefinedLossError:
            return cls(estimator, aggregation, None, False)
        return cls(estimator, aggregation, loss, loss == 0.0)


@dataclass(frozen=True)
class LossStats:
    median: float
    iqr: float
    mean: float


@dataclass(frozen=True)
class SummaryStats:
    accuracy: float
    AL: LossStats | None
    OAL: LossStats | None
    count: int
    undefined_count: int = 0

    @property
    def AL_median(self):
        return None if self.AL is None else self.AL.median

    @property
    def OAL_median(self):
        return None if self.OAL is None else self.OAL.median

    def as_row(self) -> dict:
        row = {"count": self.count, "undefined_loss": self.undefined_count, "accuracy": self.accuracy}
        for label, stats in (("AL", self.AL), ("OAL", self.OAL)):
            for key in ("median", "iqr", "mean"):
                row[f"{label}_{key}"] = None if stats is None else getattr(stats, key)
        return row


def _loss_stats(values: Sequence[float]) -> LossStats | None:
    if not values:
        return None
    arr = np.asarray(values, dtype=float)
    q1, q2, q3 = np.percentile(arr, [25, 50, 75])
    return LossStats(median=float(q2), iqr=float(q3 - q1), mean=float(arr.mean()))


def summarize(per_series: Sequence[SelectionQuality]) -> SummaryStats:
    """Accuracy over all entries, AL over misses, OAL over everything.

    Entries with an undefined loss count as misses for accuracy and are left
    out of AL and OAL.
    """
    if not per_series:
        raise MetricError("summarize needs at least one entry")
    hits = sum(1 for q in per_series if q.hit)
    defined = [q.loss_percent for q in per_series if q.loss_percent is not None]
    misses = [q.loss_percent for q in per_series if q.loss_percent is not None and not q.hit]
    return SummaryStats(
        accuracy=hits / len(per_series),
        AL=_loss_stats(misses),
        OAL=_loss_stats(defined),
        count=len(per_series),
        undefined_count=len(per_series) - len(defined),
    )


def random_selection_accuracy(pool_size: int) -> float:
    return 1.0 / pool_size if pool_size > 0 else math.nan
