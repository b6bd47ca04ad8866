"""Series container, time-delay embedding and the estimation/test partition."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MIN_SERIES_LENGTH = 30
MIN_EMBEDDED_ROWS = 10


class SeriesError(ValueError):
    """Invalid series contents or a malformed input file."""


class EmbeddingError(ValueError):
    pass


class PartitionError(ValueError):
    pass


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """An ordered univariate series of finite reals.

    Parameters
    ----------
    id : str
        Opaque identifier carried into every report.
    values : array_like
        Observations in chronological order.
    source : str, optional
        Provenance, e.g. the file the series was read from.
    timestamps : tuple of str, optional
        Metadata only; never used in computation.
    """

    id: str
    values: np.ndarray
    source: str | None = None
    timestamps: tuple[str, ...] | None = field(default=None, repr=False)
    min_length: int = field(default=MIN_SERIES_LENGTH, repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise SeriesError(f"series {self.id!r}: values must be one-dimensional")
        if len(values) < self.min_length:
            raise SeriesError(
                f"series {self.id!r}: length {len(values)} below minimum {self.min_length}"
            )
        if not np.all(np.isfinite(values)):
            raise SeriesError(f"series {self.id!r}: non-finite values present")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class EmbeddedDataset:
    """Regression view of a series for lag order ``p``.

    ``features[i, j]`` holds ``y[origin[i] - j - 1]``, so column 0 is the most
    recent lag. ``targets[i] == y[origin[i]]``.
    """

    features: np.ndarray
    targets: np.ndarray
    p: int
    origin: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def n_rows(self) -> int:
        return len(self.targets)

    def subset(self, rows) -> EmbeddedDataset:
        rows = np.asarray(rows, dtype=np.intp)
        return EmbeddedDataset(
            features=_frozen(self.features[rows]),
            targets=_frozen(self.targets[rows]),
            p=self.p,
            origin=_frozen_int(self.origin[rows]),
        )


def _frozen_int(values) -> np.ndarray:
    arr = np.array(values, dtype=np.intp)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Partition:
    """Temporal estimation/test split of an embedded dataset."""

    estimation: EmbeddedDataset
    test: EmbeddedDataset
    ratio: float
    split_row: int

    @property
    def estimation_rows(self) -> range:
        return range(0, self.split_row)

    @property
    def test_rows(self) -> range:
        return range(self.split_row, self.split_row + len(self.test))


def embed(series: TimeSeries, p: int) -> EmbeddedDataset:
    """Time-delay embedding of ``series`` with ``p`` lags.

    Raises
    ------
    EmbeddingError
        If ``p`` is not in ``[1, n - 10]``.
    """
    y = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    n = len(y)
    if isinstance(p, bool) or int(p) != p or p < 1 or p > n - MIN_EMBEDDED_ROWS:
        raise EmbeddingError(
            f"lag order p={p} out of range for series of length n={n} "
            f"(need 1 <= p <= {n - MIN_EMBEDDED_ROWS})"
        )
    p = int(p)
    n_rows = n - p
    origin = np.arange(p, n)
    # column j = y[t - j - 1]
    idx = origin[:, None] - np.arange(1, p + 1)[None, :]
    return EmbeddedDataset(
        features=_frozen(y[idx]),
        targets=_frozen(y[p:]),
        p=p,
        origin=_frozen_int(origin),
    )


def reconstruct(dataset: EmbeddedDataset) -> np.ndarray:
    """Rebuild the contiguous series region covered by ``dataset``."""
    start = int(dataset.origin[0]) - dataset.p
    stop = int(dataset.origin[-1]) + 1
    out = np.full(stop - start, np.nan)
    for row, t in enumerate(dataset.origin):
        out[t - start] = dataset.targets[row]
        out[t - start - dataset.p : t - start] = dataset.features[row, ::-1]
    return out


def partition(dataset: EmbeddedDataset, ratio: float = 0.7) -> Partition:
    """Split embedded rows at ``floor(ratio * N)``; no shuffling."""
    if not 0.0 < ratio < 1.0:
        raise PartitionError(f"ratio must lie in (0, 1), got {ratio}")
    n_rows = len(dataset)
    split = math.floor(ratio * n_rows)
    if split < 1 or split >= n_rows:
        raise PartitionError(
            f"degenerate split: ratio={ratio} on N={n_rows} rows gives "
            f"{split} estimation and {n_rows - split} test rows"
        )
    return Partition(
        estimation=dataset.subset(np.arange(split)),
        test=dataset.subset(np.arange(split, n_rows)),
        ratio=ratio,
        split_row=split,
    )


def load_csv(path, min_length: int = MIN_SERIES_LENGTH) -> TimeSeries:
    """Read one series from a CSV with a ``value`` or ``timestamp,value`` header."""
    path = Path(path)
    values: list[float] = []
    stamps: list[str] = []
    errors: list[str] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise SeriesError(f"{path}: empty file") from None
        if header == ["value"]:
            has_ts = False
        elif header == ["timestamp", "value"]:
            has_ts = True
        else:
            raise SeriesError(
                f"{path}:1: header must be 'value' or 'timestamp,value', got {','.join(header)}"
            )
        width = len(header)
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                errors.append(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
                continue
            raw = row[-1].strip()
            try:
                v = float(raw)
            except ValueError:
                errors.append(f"{path}:{lineno}: value {raw!r} is not a number")
                continue
            if not math.isfinite(v):
                errors.append(f"{path}:{lineno}: value {raw!r} is not finite")
                continue
            values.append(v)
            if has_ts:
                stamps.append(row[0].strip())
    if errors:
        raise SeriesError("; ".join(errors))
    return TimeSeries(
        id=path.stem,
        values=values,
        source=str(path),
        timestamps=tuple(stamps) if has_ts else None,
        min_length=min_length,
    )


def write_csv(series: TimeSeries, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in series.values:
            writer.writerow([repr(float(v))])
