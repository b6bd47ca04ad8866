"""Split plans for the ten performance estimation methods.

Every plan indexes embedded rows ``0..N-1`` of an estimation set. K-way
partitions use base size ``N // K`` with the first ``N % K`` folds one row
larger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ESTIMATORS = (
    "CV",
    "CV-Bl",
    "CV-Mod",
    "CV-hvBl",
    "Holdout",
    "Rep-Holdout",
    "Preq-Bls",
    "Preq-Sld-Bls",
    "Preq-Bls-Trim",
    "Preq-Bls-Gap",
)

# plans in which every train row precedes every test row
TEMPORAL_ESTIMATORS = frozenset(
    {"Holdout", "Rep-Holdout", "Preq-Bls", "Preq-Sld-Bls", "Preq-Bls-Trim", "Preq-Bls-Gap"}
)


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class ResamplerSpec:
    method: str
    K: int = 10
    p: int = 1
    seed: int = 0
    train_fraction: float = 0.6
    test_fraction: float = 0.1
    holdout_fraction: float = 0.7
    trim_keep_fraction: float = 0.6

    def __post_init__(self):
        if self.method not in ESTIMATORS:
            raise PlanError(f"unknown estimator {self.method!r}; expected one of {ESTIMATORS}")
        if self.K < 1:
            raise PlanError(f"K must be positive, got {self.K}")
        if self.seed < 0:
            raise PlanError(f"seed must be unsigned, got {self.seed}")
        for name in ("train_fraction", "test_fraction", "holdout_fraction", "trim_keep_fraction"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise PlanError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class Iteration:
    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class SplitPlan:
    method: str
    iterations: tuple[Iteration, ...]
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.iterations)

    def __iter__(self):
        return iter(self.iterations)

    def max_index(self) -> int:
        return max(int(max(it.train.max(), it.test.max())) for it in self.iterations)


def _ro(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.intp)
    arr.setflags(write=False)
    return arr


def fold_bounds(N: int, K: int) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` bounds of ``K`` contiguous folds over ``N`` rows."""
    base, extra = divmod(N, K)
    bounds = []
    start = 0
    for k in range(K):
        stop = start + base + (1 if k < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise PlanError(msg)


def _check_fold_sizes(N: int, spec: ResamplerSpec, min_blocks: int = 2) -> None:
    _require(spec.K >= 2, f"{spec.method}: K must be >= 2, got {spec.K}")
    _require(
        N >= min_blocks * spec.K,
        f"{spec.method}: need N >= {min_blocks}K = {min_blocks * spec.K} rows, got N={N}",
    )


def _plan(spec: ResamplerSpec, N: int, iterations) -> SplitPlan:
    params = {
        "N": N,
        "K": spec.K,
        "p": spec.p,
        "seed": spec.seed,
        "train_fraction": spec.train_fraction,
        "test_fraction": spec.test_fraction,
        "holdout_fraction": spec.holdout_fraction,
        "trim_keep_fraction": spec.trim_keep_fraction,
    }
    return SplitPlan(
        method=spec.method,
        iterations=tuple(Iteration(_ro(tr), _ro(te)) for tr, te in iterations),
        params=params,
    )


def _shuffled_folds(N: int, spec: ResamplerSpec) -> list[np.ndarray]:
    perm = np.random.default_rng(spec.seed).permutation(N)
    return [np.sort(perm[a:b]) for a, b in fold_bounds(N, spec.K)]


def cv_shuffled(N: int, spec: ResamplerSpec) -> SplitPlan:
    _check_fold_sizes(N, spec)
    folds = _shuffled_folds(N, spec)
    its = []
    for k, test in enumerate(folds):
        train = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != k]))
        its.append((train, test))
    return _plan(spec, N, its)


def cv_blocked(N: int, spec: ResamplerSpec) -> SplitPlan:
    _check_fold_sizes(N, spec)
    rows = np.arange(N)
    its = []
    for a, b in fold_bounds(N, spec.K):
        its.append((np.concatenate([rows[:a], rows[b:]]), rows[a:b]))
    return _plan(spec, N, its)


def _purge_gap_p(spec: ResamplerSpec) -> None:
    _require(spec.p >= 1, f"{spec.method}: p must be >= 1, got {spec.p}")


def cv_modified(N: int, spec: ResamplerSpec) -> SplitPlan:
    """Shuffled CV, dropping train rows within ``p`` rows of any test row."""
    _purge_gap_p(spec)
    _check_fold_sizes(N, spec)
    its = []
    for k, it in enumerate(cv_shuffled(N, spec).iterations):
        near = np.zeros(N, dtype=bool)
        for offset in range(-spec.p, spec.p + 1):
            shifted = it.test + offset
            near[shifted[(shifted >= 0) & (shifted < N)]] = True
        train = it.train[~near[it.train]]
        _require(
            len(train) >= spec.p + 1,
            f"CV-Mod: purging leaves {len(train)} training rows in iteration {k} "
            f"(need >= p+1 = {spec.p + 1})",
        )
        its.append((train, it.test))
    return _plan(spec, N, its)


def cv_hv_blocked(N: int, spec: ResamplerSpec) -> SplitPlan:
    """Blocked CV with ``p`` rows removed on each side of the test block."""
    _purge_gap_p(spec)
    _check_fold_sizes(N, spec)
    rows = np.arange(N)
    its = []
    for k, (a, b) in enumerate(fold_bounds(N, spec.K)):
        train = np.concatenate([rows[: max(0, a - spec.p)], rows[min(N, b + spec.p) :]])
        _require(len(train) > 0, f"CV-hvBl: purging empties the training set in iteration {k}")
        its.append((train, rows[a:b]))
    return _plan(spec, N, its)


def holdout(N: int, spec: ResamplerSpec) -> SplitPlan:
    _require(N >= 10, f"Holdout: need N >= 10 rows, got N={N}")
    split = math.floor(spec.holdout_fraction * N)
    _require(0 < split < N, f"Holdout: degenerate split at row {split} of N={N}")
    rows = np.arange(N)
    return _plan(spec, N, [(rows[:split], rows[split:])])


def rep_holdout_anchors(N: int, spec: ResamplerSpec) -> np.ndarray:
    n_train = math.floor(spec.train_fraction * N)
    n_test = math.floor(spec.test_fraction * N)
    _require(
        n_train >= 1 and n_test >= 1 and n_train <= N - n_test,
        f"Rep-Holdout: infeasible window (train={n_train}, test={n_test}) for N={N}",
    )
    rng = np.random.default_rng(spec.seed)
    return rng.integers(n_train, N - n_test, size=spec.K, endpoint=True)


def repeated_holdout(N: int, spec: ResamplerSpec) -> SplitPlan:
    """``K`` windows at random anchors: 60% of N before the anchor, 10% after."""
    _require(spec.K >= 1, "Rep-Holdout: K must be >= 1")
    n_train = math.floor(spec.train_fraction * N)
    n_test = math.floor(spec.test_fraction * N)
    anchors = rep_holdout_anchors(N, spec)
    its = [(np.arange(a - n_train, a), np.arange(a, a + n_test)) for a in anchors]
    return _plan(spec, N, its)


def _preq(N: int, spec: ResamplerSpec, sliding: bool = False, gap: int = 0) -> list:
    blocks = [np.arange(a, b) for a, b in fold_bounds(N, spec.K)]
    its = []
    for i in range(1, spec.K - gap):
        train = blocks[i - 1] if sliding else np.arange(0, blocks[i - 1][-1] + 1)
        its.append((train, blocks[i + gap]))
    return its


def preq_blocks(N: int, spec: ResamplerSpec) -> SplitPlan:
    _check_fold_sizes(N, spec)
    return _plan(spec, N, _preq(N, spec))


def preq_sliding_blocks(N: int, spec: ResamplerSpec) -> SplitPlan:
    _check_fold_sizes(N, spec)
    return _plan(spec, N, _preq(N, spec, sliding=True))


def trim_keep_count(K: int, keep_fraction: float = 0.6) -> int:
    return math.ceil(keep_fraction * (K - 1))


def preq_blocks_trim(N: int, spec: ResamplerSpec) -> SplitPlan:
    """The last ``ceil(0.6 (K-1))`` iterations of the growing-window plan."""
    _check_fold_sizes(N, spec)
    keep = trim_keep_count(spec.K, spec.trim_keep_fraction)
    _require(keep >= 1, f"Preq-Bls-Trim: keeps no iterations for K={spec.K}")
    its = _preq(N, spec)
    return _plan(spec, N, its[len(its) - keep :])


def preq_blocks_gap(N: int, spec: ResamplerSpec) -> SplitPlan:
    _require(spec.K >= 3, f"Preq-Bls-Gap: K must be >= 3, got {spec.K}")
    _check_fold_sizes(N, spec, min_blocks=3)
    return _plan(spec, N, _preq(N, spec, gap=1))


PLANNERS: dict[str, Callable[[int, ResamplerSpec], SplitPlan]] = {
    "CV": cv_shuffled,
    "CV-Bl": cv_blocked,
    "CV-Mod": cv_modified,
    "CV-hvBl": cv_hv_blocked,
    "Holdout": holdout,
    "Rep-Holdout": repeated_holdout,
    "Preq-Bls": preq_blocks,
    "Preq-Sld-Bls": preq_sliding_blocks,
    "Preq-Bls-Trim": preq_blocks_trim,
    "Preq-Bls-Gap": preq_blocks_gap,
}


def make_plan(N: int, spec: ResamplerSpec) -> SplitPlan:
    return PLANNERS[spec.method](N, spec)


def expected_iterations(method: str, K: int, keep_fraction: float = 0.6) -> int:
    if method in ("CV", "CV-Bl", "CV-Mod", "CV-hvBl", "Rep-Holdout"):
        return K
    if method == "Holdout":
        return 1
    if method in ("Preq-Bls", "Preq-Sld-Bls"):
        return K - 1
    if method == "Preq-Bls-Trim":
        return trim_keep_count(K, keep_fraction)
    if method == "Preq-Bls-Gap":
        return K - 2
    raise PlanError(f"unknown estimator {method!r}")
