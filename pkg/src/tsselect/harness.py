"""Experiment runner: series x estimator x aggregation, plus report files."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import EmbeddingError, PartitionError, SeriesError, TimeSeries, embed, load_csv, partition
from .fnn import FnnConfig, false_nearest_neighbors
from .learners import LearnerSpec, default_pool, load_pool
from .metrics import SelectionQuality, loss_of_estimator, oracle_best, summarize, UndefinedLossError
from .resampling import ESTIMATORS, PlanError, ResamplerSpec, SplitPlan, make_plan
from .selection import AGGREGATIONS, aggregate, evaluate_pool, select

log = logging.getLogger(__name__)


class ExperimentError(RuntimeError):
    pass


class LeakageError(AssertionError):
    pass


@dataclass
class ExperimentConfig:
    data_dir: Path | None = None
    output_dir: Path | None = None
    K: int = 10
    test_ratio: float = 0.3
    estimators: tuple[str, ...] = ESTIMATORS
    aggregations: tuple[str, ...] = AGGREGATIONS
    seed: int = 0
    p_override: int | None = None
    min_length: int = 30
    stratify_threshold: int = 1000
    workers: int = 1
    pool_file: Path | None = None
    fnn: FnnConfig = field(default_factory=FnnConfig)

    def __post_init__(self):
        self.estimators = tuple(self.estimators)
        self.aggregations = tuple(self.aggregations)
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown estimators {bad}; expected a subset of {list(ESTIMATORS)}")
        bad = [a for a in self.aggregations if a not in AGGREGATIONS]
        if bad:
            raise ValueError(f"unknown aggregations {bad}; expected a subset of {list(AGGREGATIONS)}")
        if not self.estimators or not self.aggregations:
            raise ValueError("at least one estimator and one aggregation are required")
        if not 0.0 < self.test_ratio < 1.0:
            raise ValueError(f"test_ratio must lie in (0, 1), got {self.test_ratio}")
        if self.K < 2:
            raise ValueError(f"K must be >= 2, got {self.K}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def pool(self) -> list[LearnerSpec]:
        if self.pool_file is not None:
            return load_pool(self.pool_file, seed=self.seed)
        return default_pool(seed=self.seed)


@dataclass
class RunRecord:
    series_id: str
    n: int
    p: int
    estimator: str
    aggregation: str
    chosen_model: str
    oracle_model: str
    chosen_test_rmse: float
    oracle_test_rmse: float
    loss_percent: float | None
    hit: bool
    wall_time_seconds: float
    fit_count: int

    def quality(self) -> SelectionQuality:
        return SelectionQuality(self.estimator, self.aggregation, self.loss_percent, self.hit)


RECORD_FIELDS = tuple(f.name for f in fields(RunRecord))


@dataclass
class SeriesResult:
    series_id: str
    records: list[RunRecord] = field(default_factory=list)
    skip_reason: str | None = None
    detail: str = ""


@dataclass
class ReportBundle:
    records: list[RunRecord]
    skipped: list[tuple[str, str, str]]
    summary: list[dict]
    strata: list[dict]
    timing: list[dict]
    paths: dict[str, Path] = field(default_factory=dict)


def choose_lag(series: TimeSeries, config: ExperimentConfig) -> int:
    if config.p_override is not None:
        return config.p_override
    return false_nearest_neighbors(series, config.fnn).p


def run_series(
    series: TimeSeries,
    config: ExperimentConfig,
    pool: Sequence[LearnerSpec] | None = None,
    on_plan: Callable[[str, SplitPlan, int, int], None] | None = None,
) -> list[RunRecord]:
    """Full selection pipeline for one series.

    ``on_plan(estimator, plan, n_estimation_rows, n_total_rows)`` is called for
    every generated plan; it is the hook used to audit plans for leakage.
    """
    pool = list(pool) if pool is not None else config.pool()
    p = choose_lag(series, config)
    data = embed(series, p)
    part = partition(data, 1.0 - config.test_ratio)
    est = part.estimation
    n_est = len(est)

    oracle = oracle_best(pool, part)
    test_rmse = oracle.per_model_test_rmse

    records = []
    for method in config.estimators:
        t0 = time.perf_counter()
        spec = ResamplerSpec(method=method, K=config.K, p=p, seed=config.seed)
        plan = make_plan(n_est, spec)
        if plan.max_index() >= n_est:
            raise LeakageError(f"{method} plan reaches row {plan.max_index()} beyond estimation set")
        matrix = evaluate_pool(pool, est, plan)
        outcomes = [
            select(aggregate(matrix, agg), pool, agg, method) for agg in config.aggregations
        ]
        elapsed = time.perf_counter() - t0
        if on_plan is not None:
            on_plan(method, plan, n_est, len(data))
        fit_count = len(plan) * len(pool)
        for outcome in outcomes:
            chosen_rmse = float(test_rmse[outcome.index])
            try:
                loss = loss_of_estimator(chosen_rmse, oracle.best_rmse)
                hit = loss == 0.0
            except UndefinedLossError:
                loss, hit = None, False
            records.append(
                RunRecord(
                    series_id=series.id,
                    n=series.n,
                    p=p,
                    estimator=method,
                    aggregation=outcome.aggregation,
                    chosen_model=outcome.chosen.display_name,
                    oracle_model=oracle.best.display_name,
                    chosen_test_rmse=chosen_rmse,
                    oracle_test_rmse=oracle.best_rmse,
                    loss_percent=loss,
                    hit=hit,
                    wall_time_seconds=elapsed,
                    fit_count=fit_count,
                )
            )
    return records


def _run_one(args) -> SeriesResult:
    path, config = args
    return _process_path(path, config)


def _process_path(path, config: ExperimentConfig) -> SeriesResult:
    sid = Path(path).stem
    try:
        series = load_csv(path, min_length=config.min_length)
    except SeriesError as exc:
        reason = "too-short" if "below minimum" in str(exc) else "unreadable"
        return SeriesResult(sid, skip_reason=reason, detail=str(exc))
    except OSError as exc:
        return SeriesResult(sid, skip_reason="unreadable", detail=str(exc))
    return process_series(series, config)


def process_series(series: TimeSeries, config: ExperimentConfig, pool=None) -> SeriesResult:
    if np.std(series.values) == 0.0:
        return SeriesResult(series.id, skip_reason="zero-variance", detail="constant series")
    try:
        records = run_series(series, config, pool)
    except (EmbeddingError, PartitionError) as exc:
        return SeriesResult(series.id, skip_reason="embedding", detail=str(exc))
    except PlanError as exc:
        return SeriesResult(series.id, skip_reason="plan", detail=str(exc))
    except Exception as exc:  # noqa: BLE001 - one bad series must not sink the run
        log.exception("series %s failed", series.id)
        return SeriesResult(series.id, skip_reason="error", detail=f"{type(exc).__name__}: {exc}")
    return SeriesResult(series.id, records=records)


def discover_series(data_dir) -> list[Path]:
    paths = sorted(Path(data_dir).glob("*.csv"))
    if not paths:
        raise ExperimentError(f"no .csv files in {data_dir}")
    return paths


def run_experiment(config: ExperimentConfig, series: Iterable[TimeSeries] | None = None) -> ReportBundle:
    """Run every series through every estimator and aggregation.

    Reads ``*.csv`` from ``config.data_dir`` unless ``series`` is given. Writes
    report files when ``config.output_dir`` is set.
    """
    if series is not None:
        pool = config.pool()
        results = [process_series(s, config, pool) for s in series]
    else:
        paths = discover_series(config.data_dir)
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as ex:
                results = list(ex.map(_run_one, [(p, config) for p in paths]))
        else:
            results = [_process_path(p, config) for p in paths]

    records: list[RunRecord] = []
    skipped = []
    for res in results:
        if res.skip_reason:
            log.warning("skipped %s [%s]: %s", res.series_id, res.skip_reason, res.detail)
            skipped.append((res.series_id, res.skip_reason, res.detail))
        records.extend(res.records)
    if not records:
        raise ExperimentError(f"every series failed ({len(skipped)} skipped)")

    bundle = summarize_records(records, config.stratify_threshold)
    bundle.skipped = skipped
    if config.output_dir is not None:
        bundle.paths = emit_reports(bundle, config.output_dir, config)
    return bundle


def _group(records, key) -> dict:
    groups: dict = {}
    for r in records:
        groups.setdefault(key(r), []).append(r)
    return groups


def _ordered_pairs(records) -> list[tuple[str, str]]:
    seen = []
    for r in records:
        pair = (r.estimator, r.aggregation)
        if pair not in seen:
            seen.append(pair)
    est_order = {e: i for i, e in enumerate(ESTIMATORS)}
    agg_order = {a: i for i, a in enumerate(AGGREGATIONS)}
    return sorted(seen, key=lambda ea: (est_order.get(ea[0], 99), agg_order.get(ea[1], 99)))


def summary_rows(records: Sequence[RunRecord]) -> list[dict]:
    groups = _group(records, lambda r: (r.estimator, r.aggregation))
    rows = []
    for est, agg in _ordered_pairs(records):
        stats = summarize([r.quality() for r in groups[(est, agg)]])
        rows.append({"estimator": est, "aggregation": agg, **stats.as_row()})
    return rows


def stratum_of(n: int, threshold: int) -> str:
    return f"n<{threshold}" if n < threshold else f"n>={threshold}"


def strata_rows(records: Sequence[RunRecord], threshold: int) -> list[dict]:
    rows = []
    for label in (f"n<{threshold}", f"n>={threshold}"):
        subset = [r for r in records if stratum_of(r.n, threshold) == label]
        for row in summary_rows(subset):
            rows.append({"stratum": label, **row})
    return rows


def timing_rows(records: Sequence[RunRecord]) -> list[dict]:
    """Per-estimator distribution of wall time and fit counts (one entry per series)."""
    per_series = {}
    for r in records:
        per_series.setdefault((r.estimator, r.series_id), r)
    groups = _group(per_series.values(), lambda r: r.estimator)
    rows = []
    for est in [e for e in ESTIMATORS if e in groups]:
        rs = groups[est]
        t = np.array([r.wall_time_seconds for r in rs])
        fc = np.array([r.fit_count for r in rs])
        q = np.percentile(t, [0, 25, 50, 75, 100])
        rows.append(
            {
                "estimator": est,
                "series": len(rs),
                "fit_count_total": int(fc.sum()),
                "fit_count_median": float(np.median(fc)),
                "time_min": q[0],
                "time_q25": q[1],
                "time_median": q[2],
                "time_q75": q[3],
                "time_max": q[4],
                "time_mean": float(t.mean()),
            }
        )
    return rows


def summarize_records(records: Sequence[RunRecord], stratify_threshold: int = 1000) -> ReportBundle:
    return ReportBundle(
        records=list(records),
        skipped=[],
        summary=summary_rows(records),
        strata=strata_rows(records, stratify_threshold),
        timing=timing_rows(records),
    )


def _write_csv(path: Path, rows: list[dict], header: Sequence[str]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\r\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if v is None else v for k, v in row.items()})


SUMMARY_HEADER = (
    "estimator", "aggregation", "count", "undefined_loss", "accuracy",
    "AL_median", "AL_iqr", "AL_mean", "OAL_median", "OAL_iqr", "OAL_mean",
)
TIMING_HEADER = (
    "estimator", "series", "fit_count_total", "fit_count_median",
    "time_min", "time_q25", "time_median", "time_q75", "time_max", "time_mean",
)


def write_runs(records: Sequence[RunRecord], path: Path) -> None:
    with path.open("w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def read_runs(path) -> list[RunRecord]:
    records = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                records.append(RunRecord(**{k: raw[k] for k in RECORD_FIELDS}))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ExperimentError(f"{path}:{lineno}: malformed run record ({exc})") from exc
    if not records:
        raise ExperimentError(f"{path}: no run records")
    return records


def emit_reports(bundle: ReportBundle, output_dir, config: ExperimentConfig | None = None) -> dict[str, Path]:
    """Write runs.jsonl, summary.csv, strata.csv and timing.csv (plus experiment.json)."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "runs": out / "runs.jsonl",
        "summary": out / "summary.csv",
        "strata": out / "strata.csv",
        "timing": out / "timing.csv",
    }
    write_runs(bundle.records, paths["runs"])
    _write_csv(paths["summary"], bundle.summary, SUMMARY_HEADER)
    _write_csv(paths["strata"], bundle.strata, ("stratum", *SUMMARY_HEADER))
    _write_csv(paths["timing"], bundle.timing, TIMING_HEADER)
    if config is not None:
        paths["experiment"] = out / "experiment.json"
        paths["experiment"].write_text(json.dumps(describe(config, bundle), indent=2, default=str) + "\n")
    return paths


def describe(config: ExperimentConfig, bundle: ReportBundle) -> dict:
    """Settings needed to reproduce a run, including the lag-selection knobs."""
    return {
        "K": config.K,
        "test_ratio": config.test_ratio,
        "estimators": list(config.estimators),
        "aggregations": list(config.aggregations),
        "seed": config.seed,
        "lag_selection": (
            {"method": "fixed", "p": config.p_override}
            if config.p_override is not None
            else {"method": "false-nearest-neighbors", **asdict(config.fnn)}
        ),
        "stratify_threshold": config.stratify_threshold,
        "pool": [
            {"index": s.registration_index, "name": s.display_name, "algorithm": s.algorithm,
             "hyperparameters": dict(s.hyperparameters)}
            for s in config.pool()
        ],
        "skipped": [{"series_id": s, "reason": r, "detail": d} for s, r, d in bundle.skipped],
    }
