"""Embedding dimension selection by False Nearest Neighbors (Kennel criterion)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries

log = logging.getLogger(__name__)

_ROUNDOFF = 1e-9


@dataclass(frozen=True)
class FnnConfig:
    """Knobs for the false-neighbor test.

    ``p_max=None`` resolves to ``min(30, n // 5)`` for the series at hand.
    """

    p_max: int | None = None
    r_tol: float = 10.0
    a_tol: float = 2.0
    fnn_fraction_threshold: float = 0.01

    def __post_init__(self):
        if self.p_max is not None and self.p_max < 1:
            raise ValueError(f"p_max must be >= 1, got {self.p_max}")
        if not self.r_tol > 1.0:
            raise ValueError(f"r_tol must exceed 1, got {self.r_tol}")
        if not self.a_tol > 0.0:
            raise ValueError(f"a_tol must be positive, got {self.a_tol}")
        if not 0.0 < self.fnn_fraction_threshold < 1.0:
            raise ValueError(
                f"fnn_fraction_threshold must lie in (0, 1), got {self.fnn_fraction_threshold}"
            )

    def resolve_p_max(self, n: int) -> int:
        cap = max(1, n // 5)
        if self.p_max is None:
            return min(30, cap)
        if self.p_max > cap:
            raise ValueError(f"p_max={self.p_max} exceeds n/5={cap} for n={n}")
        return self.p_max


@dataclass(frozen=True)
class FnnResult:
    p: int
    fractions: tuple[float, ...]
    degenerate: bool = False


def false_neighbor_fraction(y: np.ndarray, d: int, r_tol: float, a_tol: float) -> float:
    """Fraction of false nearest neighbors at embedding dimension ``d``.

    Delay vectors are ``(y[i], ..., y[i+d-1])`` for ``i < n - d`` so that the
    extra coordinate ``y[i+d]`` exists. Pairs with ``|i - j| <= d`` are never
    neighbors.
    """
    y = np.asarray(y, dtype=float)
    m = len(y) - d
    d2 = _delay_sq_distances(y, d, m)
    return _fraction_from_distances(y, d, m, d2, r_tol, a_tol)


def _delay_sq_distances(y: np.ndarray, d: int, m: int) -> np.ndarray:
    d2 = np.zeros((m, m))
    for k in range(d):
        col = y[k : k + m]
        d2 += (col[:, None] - col[None, :]) ** 2
    return d2


def _fraction_from_distances(y, d, m, d2, r_tol, a_tol) -> float:
    idx = np.arange(m)
    masked = d2.copy()
    masked[np.abs(idx[:, None] - idx[None, :]) <= d] = np.inf
    nn = np.argmin(masked, axis=1)
    nn_d2 = masked[idx, nn]
    valid = np.isfinite(nn_d2)
    if not valid.any():
        return 0.0
    i = idx[valid]
    j = nn[valid]
    r_d = np.sqrt(nn_d2[valid])
    extra = np.abs(y[i + d] - y[j + d])
    r_next = np.sqrt(nn_d2[valid] + extra**2)
    spread = np.std(y)
    # round-off floor: exactly periodic data yields neighbors at distance ~1e-16
    eps = _ROUNDOFF * spread
    false = ((extra > eps) & (extra > r_tol * np.maximum(r_d, eps))) | (r_next > a_tol * spread)
    return float(np.mean(false))


def false_nearest_neighbors(series: TimeSeries, config: FnnConfig | None = None) -> FnnResult:
    """Scan ``d = 1..p_max`` and stop at the first dimension under threshold."""
    config = config or FnnConfig()
    y = np.asarray(series.values, dtype=float)
    n = len(y)
    p_max = config.resolve_p_max(n)
    if np.std(y) == 0.0:
        log.info("series %s has zero variance; FNN falls back to p=1", series.id)
        return FnnResult(p=1, fractions=(), degenerate=True)

    fractions: list[float] = []
    m_prev = n - 1
    d2 = np.zeros((m_prev, m_prev))
    for d in range(1, p_max + 1):
        m = n - d
        # grow the squared distance matrix by the d-th coordinate, shrink to m points
        d2 = d2[:m, :m]
        col = y[d - 1 : d - 1 + m]
        d2 = d2 + (col[:, None] - col[None, :]) ** 2
        frac = _fraction_from_distances(y, d, m, d2, config.r_tol, config.a_tol)
        fractions.append(frac)
        if frac < config.fnn_fraction_threshold:
            return FnnResult(p=d, fractions=tuple(fractions))
    return FnnResult(p=p_max, fractions=tuple(fractions))


def select_embedding_dimension(series: TimeSeries, config: FnnConfig | None = None) -> int:
    return false_nearest_neighbors(series, config).p
