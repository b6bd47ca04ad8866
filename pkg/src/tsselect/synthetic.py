"""Seeded synthetic series for fixtures and desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .core import MIN_SERIES_LENGTH, TimeSeries

KINDS = ("ar", "sine", "noise", "trend")

_BURN_IN = 200


def stable_ar2_coefficients(rng: np.random.Generator, margin: float = 0.05) -> tuple[float, float]:
    """Draw (phi1, phi2) uniformly from the AR(2) stationarity triangle.

    The triangle is ``|phi2| < 1``, ``phi2 + phi1 < 1``, ``phi2 - phi1 < 1``;
    ``margin`` keeps draws away from the unit-root edges.
    """
    while True:
        phi2 = rng.uniform(-1.0 + margin, 1.0 - margin)
        phi1 = rng.uniform(-2.0, 2.0)
        if phi2 + phi1 < 1.0 - margin and phi2 - phi1 < 1.0 - margin:
            return float(phi1), float(phi2)


def ar_recursion(coefficients, innovations, start=None) -> np.ndarray:
    """``y[t] = sum_k c[k] * y[t-k-1] + e[t]`` from ``start`` (zeros by default)."""
    coefs = np.asarray(coefficients, dtype=float)
    order = len(coefs)
    e = np.asarray(innovations, dtype=float)
    y = np.zeros(len(e))
    if start is not None:
        y[:order] = start
    for t in range(order, len(e)):
        y[t] = coefs @ y[t - order : t][::-1] + e[t]
    return y


def generate_synthetic(
    kind: str,
    n: int,
    seed: int = 0,
    *,
    coefficients=None,
    noise: float | None = None,
    start=None,
    period: float | None = None,
    series_id: str | None = None,
) -> TimeSeries:
    """Generate a deterministic series of length ``n``.

    ``ar``
        AR process; coefficients default to a uniform draw from the AR(2)
        stationarity triangle. With ``start`` given, the recursion starts from
        it with no burn-in; otherwise 200 burn-in steps are discarded.
        ``noise`` is the innovation standard deviation (default 1).
    ``sine``
        Sine with period drawn from [8, 40] unless given, plus Gaussian noise
        (default sd 0.1).
    ``noise``
        Standard Gaussian white noise (scaled by ``noise`` if given).
    ``trend``
        Strictly increasing: cumulative sum of ``0.5 + Exp(1)`` increments.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {KINDS}")
    if n < MIN_SERIES_LENGTH:
        raise ValueError(f"n must be >= {MIN_SERIES_LENGTH}, got {n}")
    rng = np.random.default_rng(seed)
    sid = series_id or f"{kind}-{n}-{seed}"

    if kind == "ar":
        coefs = np.asarray(
            stable_ar2_coefficients(rng) if coefficients is None else coefficients, dtype=float
        )
        sd = 1.0 if noise is None else noise
        if start is not None:
            e = rng.normal(0.0, 1.0, n) * sd
            values = ar_recursion(coefs, e, start)
        else:
            e = rng.normal(0.0, 1.0, n + _BURN_IN) * sd
            values = ar_recursion(coefs, e)[_BURN_IN:]
        source = "synthetic:ar(" + ",".join(f"{c:.6g}" for c in coefs) + f");sd={sd:g}"
    elif kind == "sine":
        per = rng.uniform(8.0, 40.0) if period is None else period
        sd = 0.1 if noise is None else noise
        phase = rng.uniform(0.0, 2 * np.pi)
        t = np.arange(n)
        values = np.sin(2 * np.pi * t / per + phase) + rng.normal(0.0, 1.0, n) * sd
        source = f"synthetic:sine(period={per:.6g});sd={sd:g}"
    elif kind == "noise":
        sd = 1.0 if noise is None else noise
        values = rng.normal(0.0, 1.0, n) * sd
        source = f"synthetic:noise;sd={sd:g}"
    else:
        values = np.cumsum(0.5 + rng.exponential(1.0, n))
        source = "synthetic:trend"
    return TimeSeries(id=sid, values=values, source=source)
