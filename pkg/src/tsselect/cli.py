"""Command line entry point: ``run``, ``synth`` and ``report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import write_csv
from .harness import ExperimentConfig, ExperimentError, emit_reports, read_runs, run_experiment, summarize_records
from .resampling import ESTIMATORS
from .selection import AGGREGATIONS
from .synthetic import KINDS, generate_synthetic

log = logging.getLogger("tsselect")

# config-file key -> (argparse dest, converter)
_CONFIG_KEYS = {
    "data_dir": ("data_dir", str),
    "output": ("output", str),
    "k": ("k", int),
    "test_ratio": ("test_ratio", float),
    "estimators": ("estimators", str),
    "aggregations": ("aggregations", str),
    "seed": ("seed", int),
    "p": ("p", int),
    "min_length": ("min_length", int),
    "stratify_threshold": ("stratify_threshold", int),
    "workers": ("workers", int),
    "pool": ("pool", str),
}

_RUN_DEFAULTS = {
    "data_dir": None,
    "output": None,
    "k": 10,
    "test_ratio": 0.3,
    "estimators": ",".join(ESTIMATORS),
    "aggregations": ",".join(AGGREGATIONS),
    "seed": 0,
    "p": None,
    "min_length": 30,
    "stratify_threshold": 1000,
    "workers": 1,
    "pool": None,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys mirror the CLI flags."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        dest, conv = _CONFIG_KEYS[key]
        try:
            values[dest] = conv(value)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return values


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsselect",
        description="Compare performance estimation methods for forecasting model selection.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the estimator x aggregation x series experiment")
    run.add_argument("--config", help="key = value file; command line flags take precedence")
    run.add_argument("--data-dir", dest="data_dir")
    run.add_argument("--output", dest="output")
    run.add_argument("--k", type=int)
    run.add_argument("--test-ratio", dest="test_ratio", type=float)
    run.add_argument("--estimators", help="comma-separated subset of: " + ",".join(ESTIMATORS))
    run.add_argument("--aggregations", help="comma-separated subset of: " + ",".join(AGGREGATIONS))
    run.add_argument("--seed", type=int)
    run.add_argument("--p", type=int, help="fixed lag order (skips false-nearest-neighbours)")
    run.add_argument("--min-length", dest="min_length", type=int)
    run.add_argument("--stratify-threshold", dest="stratify_threshold", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--pool", help="JSON list of {algorithm, hyperparameters} records")

    synth = sub.add_parser("synth", help="write a synthetic series to CSV")
    synth.add_argument("--kind", required=True, choices=KINDS)
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--noise", type=float)
    synth.add_argument("--out", required=True)

    report = sub.add_parser("report", help="re-summarize an existing runs.jsonl")
    report.add_argument("--runs", required=True)
    report.add_argument("--output", required=True)
    report.add_argument("--stratify-threshold", dest="stratify_threshold", type=int, default=1000)
    return parser


def _resolve_run_args(args) -> dict:
    settings = dict(_RUN_DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in _RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _cmd_run(args) -> int:
    s = _resolve_run_args(args)
    if not s["data_dir"] or not s["output"]:
        raise ValueError("run needs --data-dir and --output (flags or config file)")
    config = ExperimentConfig(
        data_dir=Path(s["data_dir"]),
        output_dir=Path(s["output"]),
        K=s["k"],
        test_ratio=s["test_ratio"],
        estimators=_csv_list(s["estimators"]),
        aggregations=_csv_list(s["aggregations"]),
        seed=s["seed"],
        p_override=s["p"],
        min_length=s["min_length"],
        stratify_threshold=s["stratify_threshold"],
        workers=s["workers"],
        pool_file=Path(s["pool"]) if s["pool"] else None,
    )
    bundle = run_experiment(config)
    n_series = len({r.series_id for r in bundle.records})
    print(
        f"{len(bundle.records)} records from {n_series} series "
        f"({len(bundle.skipped)} skipped) -> {config.output_dir}"
    )
    return 0


def _cmd_synth(args) -> int:
    series = generate_synthetic(args.kind, args.n, args.seed, noise=args.noise, series_id=Path(args.out).stem)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(series, args.out)
    return 0


def _cmd_report(args) -> int:
    records = read_runs(args.runs)
    bundle = summarize_records(records, args.stratify_threshold)
    emit_reports(bundle, args.output)
    print(f"summarized {len(records)} records -> {args.output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": _cmd_run, "synth": _cmd_synth, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, ExperimentError) as exc:
        print(f"tsselect: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
