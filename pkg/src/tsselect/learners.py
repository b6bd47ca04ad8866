"""Auto-regressive learners and the default model pool.

Each learner maps lag-feature rows to a one-step-ahead forecast. Fitting is
deterministic given the LearnerSpec and data; the only stochastic learner (bagging)
draws from a seed carried in its hyperparameters.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

SINGULAR_RIDGE = 1e-8


class FitError(ValueError):
    pass


class PredictError(ValueError):
    pass


ALGORITHMS = ("naive", "mean", "ols", "ridge", "enet", "knn", "tree", "bagging", "gbm")

_DEFAULTS: dict[str, dict[str, Any]] = {
    "naive": {},
    "mean": {},
    "ols": {},
    "ridge": {"lambda": 1.0},
    "enet": {"lambda": 1.0, "mixing": 0.5, "tol": 1e-8, "max_sweeps": 10_000},
    "knn": {"k": 5},
    "tree": {"max_depth": 4, "min_split": 2},
    "bagging": {"n_trees": 25, "max_depth": -1, "min_split": 5, "seed": 0},
    "gbm": {"n_iter": 50, "learning_rate": 0.1},
}


@dataclass(frozen=True)
class LearnerSpec:
    algorithm: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    display_name: str = ""
    registration_index: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        unknown = set(self.hyperparameters) - set(_DEFAULTS[self.algorithm])
        if unknown:
            raise ValueError(f"{self.algorithm}: unknown hyperparameters {sorted(unknown)}")
        hp = {**_DEFAULTS[self.algorithm], **dict(self.hyperparameters)}
        object.__setattr__(self, "hyperparameters", MappingProxyType(hp))
        if not self.display_name:
            object.__setattr__(self, "display_name", _default_name(self.algorithm, self.hyperparameters))

    @property
    def key(self) -> tuple:
        return (self.algorithm, tuple(sorted(self.hyperparameters.items())))

    def __hash__(self):
        return hash((self.key, self.display_name, self.registration_index))

    def __eq__(self, other):
        if not isinstance(other, LearnerSpec):
            return NotImplemented
        return (self.key, self.display_name, self.registration_index) == (
            other.key,
            other.display_name,
            other.registration_index,
        )


_NAME_KEYS = {
    "ridge": ("lambda",),
    "enet": ("lambda", "mixing"),
    "knn": ("k",),
    "tree": ("max_depth",),
    "bagging": ("n_trees",),
    "gbm": ("n_iter",),
}


def _default_name(algorithm: str, hp: Mapping[str, Any]) -> str:
    keys = _NAME_KEYS.get(algorithm, ())
    if not keys:
        return algorithm
    return f"{algorithm}(" + ",".join(f"{k}={hp[k]}" for k in keys) + ")"


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: LearnerSpec
    parameters: Mapping[str, Any]
    training_rows: int
    width: int
    flags: tuple[str, ...] = ()


def _check_xy(features, targets) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(features, dtype=float)
    y = np.ascontiguousarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise FitError(f"features must be a 2-D matrix with >= 1 column, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise FitError(f"targets shape {y.shape} does not match {X.shape[0]} feature rows")
    if X.shape[0] < 2:
        raise FitError(f"need >= 2 training rows, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise FitError("non-finite training data")
    return X, y


def _linear(X: np.ndarray, y: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Least squares with an unpenalised intercept and ridge penalty ``lam``."""
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ Xc
    if lam > 0:
        gram = gram + lam * np.eye(X.shape[1])
    coef = np.linalg.solve(gram, Xc.T @ yc)
    return coef, float(y_mean - x_mean @ coef)


def _fit_ols(X, y):
    flags = ()
    Xc = X - X.mean(axis=0)
    if np.linalg.matrix_rank(Xc) < X.shape[1]:
        flags = ("singular-ridge-fallback",)
        coef, intercept = _linear(X, y, SINGULAR_RIDGE)
    else:
        try:
            coef, intercept = _linear(X, y, 0.0)
        except np.linalg.LinAlgError:
            flags = ("singular-ridge-fallback",)
            coef, intercept = _linear(X, y, SINGULAR_RIDGE)
    return {"coef": coef, "intercept": intercept}, flags


def _fit_enet(X, y, hp):
    x_mean = X.mean(axis=0)
    x_sd = X.std(axis=0)
    scale = np.where(x_sd > 0, x_sd, 1.0)
    Z = np.ascontiguousarray((X - x_mean) / scale)
    y_mean = y.mean()
    beta, sweeps = _kernels.elastic_net_cd(
        Z, y - y_mean, float(hp["lambda"]), float(hp["mixing"]), float(hp["tol"]), int(hp["max_sweeps"])
    )
    beta = np.where(x_sd > 0, beta, 0.0)
    coef = beta / scale
    flags = ("max-sweeps-reached",) if sweeps >= hp["max_sweeps"] else ()
    return {"coef": coef, "intercept": float(y_mean - x_mean @ coef)}, flags


def _node_arrays(n_nodes: int):
    return (
        np.full(n_nodes, -1, dtype=np.int64),
        np.zeros(n_nodes),
        np.full(n_nodes, -1, dtype=np.int64),
        np.full(n_nodes, -1, dtype=np.int64),
        np.zeros(n_nodes),
    )


def fit(spec: LearnerSpec, features, targets) -> FittedModel:
    """Fit ``spec`` on lag features and targets."""
    X, y = _check_xy(features, targets)
    hp = spec.hyperparameters
    algo = spec.algorithm
    flags: tuple[str, ...] = ()
    if algo == "naive":
        params: dict[str, Any] = {}
    elif algo == "mean":
        params = {"mean": float(y.mean())}
    elif algo == "ols":
        params, flags = _fit_ols(X, y)
    elif algo == "ridge":
        lam = float(hp["lambda"])
        if lam < 0:
            raise FitError(f"ridge lambda must be >= 0, got {lam}")
        coef, intercept = _linear(X, y, lam)
        params = {"coef": coef, "intercept": intercept}
    elif algo == "enet":
        params, flags = _fit_enet(X, y, hp)
    elif algo == "knn":
        k = int(hp["k"])
        if k < 1:
            raise FitError(f"knn k must be >= 1, got {k}")
        params = {"X": X.copy(), "y": y.copy(), "k": min(k, len(y))}
    elif algo == "tree":
        nodes = _node_arrays(2 * len(y) + 1)
        n_nodes = _kernels.build_tree(
            X, y, np.ones(len(y)), _kernels.presort(X), int(hp["max_depth"]), float(hp["min_split"]), *nodes
        )
        params = {"nodes": tuple(a[:n_nodes].copy() for a in nodes)}
    elif algo == "bagging":
        n = len(y)
        rng = np.random.default_rng(int(hp["seed"]))
        draws = rng.integers(0, n, size=(int(hp["n_trees"]), n))
        weights = _kernels.bootstrap_weights(draws)
        params = {
            "forest": _kernels.fit_forest(X, y, weights, int(hp["max_depth"]), float(hp["min_split"]))
        }
    elif algo == "gbm":
        n_iter = int(hp["n_iter"])
        if n_iter < 0:
            raise FitError(f"gbm n_iter must be >= 0, got {n_iter}")
        params = {"stumps": _kernels.fit_boosted_stumps(
            X, y, float(y.mean()), n_iter, float(hp["learning_rate"])
        )}
    else:  # pragma: no cover - guarded by LearnerSpec
        raise FitError(f"unknown algorithm {algo!r}")
    for flag in flags:
        log.debug("%s: %s", spec.display_name, flag)
    return FittedModel(spec=spec, parameters=params, training_rows=len(y), width=X.shape[1], flags=flags)


def predict(model: FittedModel, features) -> np.ndarray:
    X = np.ascontiguousarray(features, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.width:
        raise PredictError(
            f"{model.spec.display_name}: expected feature width {model.width}, got shape {X.shape}"
        )
    algo = model.spec.algorithm
    prm = model.parameters
    if algo == "naive":
        return X[:, 0].copy()
    if algo == "mean":
        return np.full(X.shape[0], prm["mean"])
    if algo in ("ols", "ridge", "enet"):
        return X @ prm["coef"] + prm["intercept"]
    if algo == "knn":
        return _kernels.knn_predict(prm["X"], prm["y"], prm["k"], X)
    if algo == "tree":
        return _kernels.predict_tree(X, *prm["nodes"])
    if algo == "bagging":
        return _kernels.predict_forest(X, *prm["forest"])
    if algo == "gbm":
        return _kernels.predict_boosted_stumps(X, *prm["stumps"], float(model.spec.hyperparameters["learning_rate"]))
    raise PredictError(f"unknown algorithm {algo!r}")  # pragma: no cover


def build_pool(entries, seed: int = 0) -> list[LearnerSpec]:
    """Register ``(algorithm, hyperparameters)`` entries in order.

    Bagging learners without an explicit seed get ``seed ^ registration_index``.
    """
    pool = []
    seen = set()
    for index, entry in enumerate(entries):
        if isinstance(entry, LearnerSpec):
            algorithm, hp, name = entry.algorithm, dict(entry.hyperparameters), entry.display_name
        elif isinstance(entry, Mapping):
            algorithm = entry["algorithm"]
            hp = dict(entry.get("hyperparameters", {}))
            name = entry.get("display_name", "")
        else:
            algorithm, hp = entry
            hp, name = dict(hp), ""
        if algorithm == "bagging" and "seed" not in hp:
            hp["seed"] = seed ^ index
        spec = LearnerSpec(algorithm, hp, name, index)
        if spec.key in seen:
            raise ValueError(f"duplicate learner {spec.display_name} at position {index}")
        seen.add(spec.key)
        pool.append(spec)
    names = [s.display_name for s in pool]
    if len(set(names)) != len(names):
        raise ValueError("display names must be unique within a pool")
    return pool


DEFAULT_POOL_ENTRIES: tuple[tuple[str, dict], ...] = (
    ("naive", {}),
    ("mean", {}),
    ("ols", {}),
    *(("ridge", {"lambda": lam}) for lam in (0.1, 1.0, 10.0)),
    *(("enet", {"lambda": 1.0, "mixing": a}) for a in (0.0, 0.25, 0.5, 0.75, 1.0)),
    *(("knn", {"k": k}) for k in (1, 3, 7, 15)),
    *(("tree", {"max_depth": d}) for d in (2, 4, 8)),
    *(("bagging", {"n_trees": b}) for b in (25, 100)),
    *(("gbm", {"n_iter": m, "learning_rate": 0.1}) for m in (10, 50, 100)),
)


def default_pool(seed: int = 0) -> list[LearnerSpec]:
    """The 23-model default pool: 9 algorithm families over small parameter grids."""
    return build_pool(DEFAULT_POOL_ENTRIES, seed=seed)


def load_pool(path, seed: int = 0) -> list[LearnerSpec]:
    """Read a pool from a JSON list of ``{"algorithm", "hyperparameters"}`` records."""
    records = json.loads(Path(path).read_text())
    if not isinstance(records, list) or not records:
        raise ValueError(f"{path}: pool file must hold a non-empty JSON list")
    return build_pool(records, seed=seed)
