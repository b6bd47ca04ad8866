import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsselect.core import (
    EmbeddedDataset,
    EmbeddingError,
    PartitionError,
    SeriesError,
    TimeSeries,
    embed,
    load_csv,
    partition,
    reconstruct,
)


def series_of(values, sid="s"):
    return TimeSeries(sid, values, min_length=1)


def test_embed_small_example():
    ds = embed(series_of([1, 2, 3, 4, 5] + list(range(6, 16))), 2)
    assert ds.features[:3].tolist() == [[2, 1], [3, 2], [4, 3]]
    assert ds.targets[:3].tolist() == [3, 4, 5]
    assert ds.origin[:3].tolist() == [2, 3, 4]


def test_embed_p1_rows():
    y = np.random.default_rng(0).normal(size=40)
    ds = embed(series_of(y), 1)
    assert ds.n_rows == 39
    np.testing.assert_array_equal(ds.features[:, 0], y[:-1])
    np.testing.assert_array_equal(ds.targets, y[1:])


@pytest.mark.parametrize("p", [1, 3, 7])
def test_embed_constant_series(p):
    ds = embed(series_of(np.full(40, 5.0)), p)
    assert np.all(ds.features == 5.0)
    assert np.all(ds.targets == 5.0)


@pytest.mark.parametrize("p", [0, -1, 31, 2.5])
def test_embed_rejects_out_of_range(p):
    with pytest.raises(EmbeddingError, match=r"p=.*n=40"):
        embed(series_of(np.arange(40.0)), p)


def test_embedded_arrays_are_read_only():
    ds = embed(series_of(np.arange(40.0)), 2)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


@settings(max_examples=60, deadline=None)
@given(
    values=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=12, max_size=80),
    data=st.data(),
)
def test_embedding_invariants(values, data):
    y = np.array(values)
    p = data.draw(st.integers(1, len(y) - 10))
    ds = embed(series_of(y), p)
    assert ds.n_rows == len(y) - p
    assert np.all(np.diff(ds.origin) > 0)
    # tail property and per-cell lag layout
    np.testing.assert_array_equal(ds.targets, y[p:])
    for i in (0, ds.n_rows - 1):
        t = ds.origin[i]
        np.testing.assert_array_equal(ds.features[i], [y[t - j] for j in range(1, p + 1)])
    # round trip
    np.testing.assert_array_equal(reconstruct(ds), y)
    # purity
    again = embed(series_of(y), p)
    np.testing.assert_array_equal(again.features, ds.features)


def _manual_dataset(N, p=1):
    feats = np.arange(N, dtype=float)[:, None]
    return EmbeddedDataset(features=feats, targets=np.arange(N, dtype=float), p=p, origin=np.arange(N) + p)


@pytest.mark.parametrize(
    "N,ratio,n_est",
    [(10, 0.7, 7), (100, 0.7, 70), (3, 0.5, 1)],
)
def test_partition_examples(N, ratio, n_est):
    part = partition(_manual_dataset(N), ratio)
    assert len(part.estimation) == n_est
    assert len(part.test) == N - n_est
    assert part.estimation.targets.tolist() == list(range(n_est))
    assert part.test.targets.tolist() == list(range(n_est, N))
    assert part.estimation.origin.max() < part.test.origin.min()


@pytest.mark.parametrize("ratio", [0.0, 1.0, -0.1, 0.05])
def test_partition_degenerate(ratio):
    with pytest.raises(PartitionError):
        partition(_manual_dataset(10), ratio)


def test_series_validation():
    with pytest.raises(SeriesError, match="below minimum"):
        TimeSeries("short", np.arange(29.0))
    with pytest.raises(SeriesError, match="non-finite"):
        TimeSeries("bad", [np.nan] + [1.0] * 40)
    assert TimeSeries("ok", np.arange(30.0)).n == 30


def test_load_csv_value_column(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("value\n" + "\n".join(str(v) for v in range(35)) + "\n")
    s = load_csv(path)
    assert s.id == "one"
    assert s.values.tolist() == list(map(float, range(35)))
    assert s.timestamps is None


def test_load_csv_with_timestamps(tmp_path):
    path = tmp_path / "two.csv"
    lines = ["timestamp,value"] + [f"2020-01-{i:02d},{i * 0.5}" for i in range(1, 32)]
    path.write_text("\n".join(lines))
    s = load_csv(path)
    assert s.n == 31
    assert s.timestamps[0] == "2020-01-01"
    assert s.values[-1] == 15.5


def test_load_csv_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["value"] + [str(i) for i in range(40)]
    rows[5] = "abc"
    rows[9] = "inf"
    path.write_text("\n".join(rows))
    with pytest.raises(SeriesError) as err:
        load_csv(path)
    assert "bad.csv:6" in str(err.value)
    assert "bad.csv:10" in str(err.value)


def test_load_csv_rejects_header(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(SeriesError, match="header"):
        load_csv(path)
