import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tsselect.core import TimeSeries, embed, partition
from tsselect.learners import LearnerSpec, build_pool, fit, predict
from tsselect.metrics import rmse
from tsselect.resampling import ResamplerSpec, holdout, make_plan
from tsselect.selection import (
    FoldScoreMatrix,
    SelectionError,
    aggregate_mean,
    aggregate_rank,
    evaluate_pool,
    rank_matrix,
    select,
)
from tsselect.synthetic import generate_synthetic


def counting_ranks(col):
    """Rank by counting: 1 + #strictly smaller + half of the other ties."""
    col = list(col)
    return [1 + sum(v < x for v in col) + 0.5 * (sum(v == x for v in col) - 1) for x in col]


def pool_of(n):
    return build_pool([("ridge", {"lambda": float(i + 1)}) for i in range(n)])


def M(rows):
    return FoldScoreMatrix(np.array(rows, dtype=float))


def test_mean_examples():
    assert aggregate_mean(M([[1, 3]])).tolist() == [2.0]
    np.testing.assert_array_equal(aggregate_mean(M([[4], [2], [9]])), [4, 2, 9])
    assert aggregate_mean(M([[1, np.inf], [2, 2]]))[0] == np.inf


def test_rank_examples():
    assert aggregate_rank(M([[1, 1, 1], [2, 3, 4]])).tolist() == [1.0, 2.0]
    assert rank_matrix(M([[5.0], [5.0]])).ravel().tolist() == [1.5, 1.5]
    # failed fits rank last
    assert aggregate_rank(M([[np.inf], [3.0], [1.0]])).tolist() == [3.0, 2.0, 1.0]


def test_mean_and_rank_disagree_on_outlier_fold():
    # A = (2, 2, 2), B = (1, 1, 7)
    # mean: A = 2, B = 3 -> A; per-fold ranks B, B, A -> A = 5/3, B = 4/3 -> B
    m = M([[2, 2, 2], [1, 1, 7]])
    pool = pool_of(2)
    mean = aggregate_mean(m)
    rank = aggregate_rank(m)
    assert mean.tolist() == [2.0, 3.0]
    np.testing.assert_allclose(rank, [5 / 3, 4 / 3])
    for col in m.scores.T:
        assert rank_matrix(M(col[:, None])).ravel().tolist() == counting_ranks(col)
    assert select(mean, pool).index == 0
    assert select(rank, pool).index == 1


@pytest.mark.parametrize(
    "scores,idx", [((3, 1, 2), 1), ((1, 1), 0), ((np.inf, 5), 1)]
)
def test_select_examples(scores, idx):
    out = select(np.array(scores, dtype=float), pool_of(len(scores)), "mean-error", "CV")
    assert out.index == idx
    assert out.chosen.registration_index == idx


def test_select_no_viable_model():
    with pytest.raises(SelectionError):
        select(np.array([np.inf, np.inf]), pool_of(2))


def test_select_length_mismatch():
    with pytest.raises(ValueError):
        select(np.array([1.0]), pool_of(2))


score_matrices = arrays(
    float,
    st.tuples(st.integers(1, 8), st.integers(1, 6)),
    elements=st.one_of(st.floats(1e-6, 1e3), st.sampled_from([0.0, 0.5, 1.0, 2.0])),
)


@settings(max_examples=200, deadline=None)
@given(scores=score_matrices)
def test_rank_properties(scores):
    m = FoldScoreMatrix(scores)
    n_models = scores.shape[0]
    ranks = rank_matrix(m)
    for j in range(scores.shape[1]):
        np.testing.assert_allclose(ranks[:, j], counting_ranks(scores[:, j]))
        assert ranks[:, j].sum() == pytest.approx(n_models * (n_models + 1) / 2)
    agg = aggregate_rank(m)
    assert np.all(agg >= 1) and np.all(agg <= n_models)


@settings(max_examples=200, deadline=None)
@given(scores=score_matrices, scale=st.sampled_from([0.5, 2.0, 3.0, 10.0, 1e-3, 7.25]))
def test_positive_scaling_invariance(scores, scale):
    m = FoldScoreMatrix(scores)
    scaled = FoldScoreMatrix(scores * scale)
    pool = pool_of(scores.shape[0])
    assert np.array_equal(aggregate_rank(m), aggregate_rank(scaled))
    assert select(aggregate_mean(m), pool).index == select(aggregate_mean(scaled), pool).index


@settings(max_examples=100, deadline=None)
@given(scores=score_matrices, winner=st.integers(0, 7))
def test_dominant_model_selected_by_both(scores, winner):
    winner = winner % scores.shape[0]
    scores = scores + 1.0
    scores[winner] = 0.0
    m = FoldScoreMatrix(scores)
    pool = pool_of(scores.shape[0])
    assert select(aggregate_mean(m), pool).index == winner
    assert select(aggregate_rank(m), pool).index == winner


@pytest.fixture(scope="module")
def est_data():
    s = generate_synthetic("ar", 240, seed=1, coefficients=(0.5, 0.2))
    return partition(embed(s, 2), 0.7).estimation


def test_single_model_single_iteration(est_data):
    spec = LearnerSpec("ols")
    plan = holdout(len(est_data), ResamplerSpec("Holdout"))
    m = evaluate_pool([spec], est_data, plan)
    it = plan.iterations[0]
    model = fit(spec, est_data.features[it.train], est_data.targets[it.train])
    direct = rmse(predict(model, est_data.features[it.test]), est_data.targets[it.test])
    assert m.scores.shape == (1, 1)
    assert m.scores[0, 0] == direct


def test_perfect_model_scores_zero():
    # a sinusoid obeys y_t = 2 cos(w) y_{t-1} - y_{t-2} exactly
    y = np.sin(2 * np.pi * np.arange(120) / 17)
    data = embed(TimeSeries("det", y), 2)
    plan = make_plan(len(data), ResamplerSpec("CV-Bl", K=5))
    m = evaluate_pool(build_pool([("ols", {}), ("mean", {})]), data, plan)
    assert np.all(m.scores[0] < 1e-12)
    assert np.all(m.scores[1] > 1e-6)


def test_preq_blocks_column_count(est_data):
    plan = make_plan(len(est_data), ResamplerSpec("Preq-Bls", K=10))
    assert evaluate_pool(pool_of(2), est_data, plan).n_iterations == 9


def test_fit_failures_become_sentinels(est_data):
    # a single training row cannot be fitted
    from tsselect.resampling import Iteration, SplitPlan

    plan = SplitPlan("custom", (Iteration(np.array([0]), np.array([5, 6])), Iteration(np.arange(20), np.arange(20, 25))))
    m = evaluate_pool(pool_of(2), est_data, plan)
    assert np.isinf(m.scores[:, 0]).all()
    assert np.isfinite(m.scores[:, 1]).all()
    assert m.failed == ((0, 0), (1, 0))
    assert aggregate_mean(m)[0] == np.inf
    assert select(aggregate_rank(m), pool_of(2)).index in (0, 1)


def test_evaluate_pool_deterministic(est_data):
    pool = build_pool([("bagging", {"n_trees": 5}), ("knn", {"k": 3})], seed=3)
    plan = make_plan(len(est_data), ResamplerSpec("CV", K=5, seed=2))
    a = evaluate_pool(pool, est_data, plan).scores
    b = evaluate_pool(pool, est_data, plan).scores
    np.testing.assert_array_equal(a, b)


def test_plan_out_of_range(est_data):
    plan = make_plan(len(est_data) + 10, ResamplerSpec("CV-Bl", K=5))
    with pytest.raises(IndexError):
        evaluate_pool(pool_of(1), est_data, plan)


def test_matrix_validation():
    with pytest.raises(ValueError):
        FoldScoreMatrix(np.array([[-1.0]]))
    with pytest.raises(ValueError):
        FoldScoreMatrix(np.zeros((0, 2)))
