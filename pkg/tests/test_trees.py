import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_best_split, split_sse
from stockcast.trees import (
    EnsembleParams,
    TreeEnsemble,
    TreeError,
    fit_adaboost_r2,
    fit_bagging,
    fit_decision_tree,
    fit_ensemble,
    fit_gradient_boosting,
    fit_random_forest,
    fit_single_tree,
    fit_xgb_like,
    predict,
    weighted_median,
)


def regression_data(rng, n=80, p=3):
    X = rng.normal(size=(n, p))
    y = np.sin(2 * X[:, 0]) + 0.5 * X[:, 1] ** 2 + 0.1 * rng.normal(size=n)
    return X, y


def mse(a, b):
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


class TestDecisionTree:
    def test_depth_zero_is_mean(self, rng):
        X, y = regression_data(rng)
        tree = fit_decision_tree(X, y, max_depth=0)
        assert tree.n_nodes == 1
        assert np.all(tree.predict(X) == pytest.approx(y.mean()))

    def test_threshold_rule_fit_exactly(self):
        X = np.array([[0.1, 5.0], [0.4, 1.0], [0.7, 3.0], [0.9, 2.0], [0.2, 4.0]])
        y = np.where(X[:, 0] > 0.5, 3.0, -1.0)
        tree = fit_decision_tree(X, y, max_depth=1)
        assert mse(tree.predict(X), y) == 0.0
        assert tree.feature[0] == 0
        assert split_sse(X, y, 0, tree.threshold[0]) == pytest.approx(brute_best_split(X, y), abs=1e-12)

    def test_constant_target_single_leaf(self, rng):
        X = rng.normal(size=(30, 4))
        tree = fit_decision_tree(X, np.full(30, 2.5), max_depth=10)
        assert tree.n_nodes == 1 and tree.value[0] == 2.5

    def test_depth_limit(self, rng):
        X, y = regression_data(rng, 300)
        for d in (1, 3, 6):
            assert fit_decision_tree(X, y, max_depth=d).depth <= d

    def test_leaf_mean_for_duplicate_rows(self):
        X = np.array([[0.0], [0.0], [1.0], [2.0]])
        y = np.array([1.0, 3.0, 5.0, 7.0])
        tree = fit_decision_tree(X, y, max_depth=None)
        # rows 0 and 1 cannot be separated, so they share a leaf with mean 2
        assert tree.predict(np.array([[0.0]]))[0] == 2.0
        assert tree.predict(np.array([[2.0]]))[0] == 7.0

    def test_midpoint_threshold_and_tie_break(self):
        # both features separate y identically: lowest feature index wins
        X = np.array([[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        tree = fit_decision_tree(X, y, max_depth=1)
        assert tree.feature[0] == 0 and tree.threshold[0] == 1.5

    def test_empty(self):
        with pytest.raises(TreeError, match="empty"):
            fit_decision_tree(np.empty((0, 2)), np.empty(0))

    def test_min_samples_split(self, rng):
        X, y = regression_data(rng, 40)
        tree = fit_decision_tree(X, y, max_depth=None, min_samples_split=41)
        assert tree.n_nodes == 1


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8), st.integers(1, 2), st.booleans())
def test_root_split_matches_exhaustive_search(seed, n, p, discrete):
    r = np.random.default_rng(seed)
    X = r.integers(0, 4, size=(n, p)).astype(float) if discrete else r.normal(size=(n, p))
    y = r.normal(size=n)
    tree = fit_decision_tree(X, y, max_depth=1)
    best = brute_best_split(X, y)
    parent = float(((y - y.mean()) ** 2).sum())
    if tree.feature[0] < 0:
        assert best == np.inf or best >= parent - 1e-12
    else:
        got = split_sse(X, y, tree.feature[0], tree.threshold[0])
        assert got == pytest.approx(best, rel=1e-9, abs=1e-12)


class TestBaggingForest:
    def test_identity_bootstrap_equals_tree(self, rng):
        X, y = regression_data(rng)
        single = fit_decision_tree(X, y, max_depth=10)
        bag = fit_bagging(X, y, EnsembleParams(ntrees=1, bootstrap=False))
        np.testing.assert_array_equal(bag.predict(X), single.predict(X))

    def test_forest_full_features_equals_tree(self, rng):
        X, y = regression_data(rng)
        single = fit_decision_tree(X, y, max_depth=10)
        rf = fit_random_forest(X, y, EnsembleParams(ntrees=1, bootstrap=False, feature_subsample=1.0))
        np.testing.assert_array_equal(rf.predict(X), single.predict(X))

    @pytest.mark.parametrize("fit", [fit_bagging, fit_random_forest])
    def test_constant_target(self, fit, rng):
        X = rng.normal(size=(40, 3))
        e = fit(X, np.full(40, -4.0), EnsembleParams(ntrees=5))
        assert np.all(e.predict(rng.normal(size=(10, 3))) == -4.0)

    @pytest.mark.parametrize("fit", [fit_bagging, fit_random_forest])
    def test_determinism(self, fit, rng):
        X, y = regression_data(rng)
        a = fit(X, y, EnsembleParams(ntrees=6, seed=9))
        b = fit(X, y, EnsembleParams(ntrees=6, seed=9))
        assert a.predict(X).tobytes() == b.predict(X).tobytes()
        c = fit(X, y, EnsembleParams(ntrees=6, seed=10))
        assert a.predict(X).tobytes() != c.predict(X).tobytes()

    def test_forest_beats_mean_predictor(self, rng):
        X, y = regression_data(rng, 120, 10)
        rf = fit_random_forest(X, y, EnsembleParams(ntrees=10, seed=1))
        flat = fit_random_forest(X, y, EnsembleParams(ntrees=10, seed=1, max_depth=0))
        assert mse(rf.predict(X), y) <= mse(flat.predict(X), y)

    def test_forest_uses_feature_subsets(self, rng):
        X, y = regression_data(rng, 100, 10)
        rf = fit_random_forest(X, y, EnsembleParams(ntrees=8, seed=3))
        bag = fit_bagging(X, y, EnsembleParams(ntrees=8, seed=3))
        assert rf.predict(X).tobytes() != bag.predict(X).tobytes()


class TestAdaBoost:
    def test_perfect_first_tree_stops(self):
        X = np.arange(8, dtype=float)[:, None]
        y = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=float)
        e = fit_adaboost_r2(X, y, EnsembleParams(ntrees=20, bootstrap=False))
        assert len(e.trees) == 1
        np.testing.assert_array_equal(e.predict(X), y)

    def test_constant_target(self, rng):
        X = rng.normal(size=(30, 2))
        e = fit_adaboost_r2(X, np.full(30, 3.0), EnsembleParams(ntrees=10))
        assert np.all(e.predict(X) == 3.0)

    def test_fits_and_weights_positive(self, rng):
        X, y = regression_data(rng, 150)
        e = fit_adaboost_r2(X, y, EnsembleParams(ntrees=15, max_depth=3, seed=2))
        assert len(e.trees) >= 2
        assert np.all(e.tree_weights > 0)
        assert mse(e.predict(X), y) < np.var(y)

    def test_degenerate_weighting(self, rng):
        X, y = regression_data(rng, 60)
        with pytest.raises(TreeError, match="degenerate weighting"):
            fit_adaboost_r2(X, y, EnsembleParams(ntrees=5, max_depth=2, learning_rate=float("inf")))

    def test_weighted_median_single(self):
        preds = np.array([[1.0, 2.0, 3.0]])
        assert weighted_median(preds, np.array([0.7])).tolist() == [1.0, 2.0, 3.0]

    def test_weighted_median_brute(self, rng):
        preds = rng.normal(size=(7, 20))
        w = rng.uniform(0.1, 1.0, 7)
        got = weighted_median(preds, w)
        for j in range(20):
            order = np.argsort(preds[:, j])
            cum = np.cumsum(w[order])
            k = next(i for i, c in enumerate(cum) if c >= 0.5 * w.sum())
            assert got[j] == preds[order[k], j]


class TestBoosting:
    def test_memorizes_four_points(self, rng):
        X = rng.normal(size=(4, 2))
        y = np.array([3.0, -1.0, 4.0, 1.5])
        gb = fit_gradient_boosting(X, y, EnsembleParams(ntrees=1, learning_rate=1.0, max_depth=None))
        np.testing.assert_allclose(gb.predict(X), y, atol=1e-12)
        direct = fit_decision_tree(X, y - y.mean(), max_depth=None)
        np.testing.assert_allclose(gb.predict(X), y.mean() + direct.predict(X), atol=1e-12)

    def test_zero_trees_is_mean(self, rng):
        X, y = regression_data(rng)
        gb = fit_gradient_boosting(X, y, EnsembleParams(ntrees=0))
        assert np.all(gb.predict(X) == y.mean())

    def test_training_error_non_increasing(self, rng):
        X, y = regression_data(rng, 150)
        base = y.mean()
        gb = fit_gradient_boosting(X, y, EnsembleParams(ntrees=25, max_depth=3, learning_rate=0.5))
        pred = np.full(y.shape, base)
        rss = [float(((y - pred) ** 2).sum())]
        for tree in gb.trees:
            pred = pred + gb.learning_rate * tree.predict(X)
            rss.append(float(((y - pred) ** 2).sum()))
        assert all(b <= a + 1e-9 for a, b in zip(rss, rss[1:]))
        assert rss[-1] < rss[0]

    def test_xgb_matches_gb_stagewise(self, rng):
        X, y = regression_data(rng, 100)
        p = EnsembleParams(ntrees=12, max_depth=4, reg_lambda=0.0, gamma=0.0)
        gb, xgb = fit_gradient_boosting(X, y, p), fit_xgb_like(X, y, p)
        for k in range(1, 13):
            a = TreeEnsemble("gradient_boosting", gb.trees[:k], 3, base_score=gb.base_score, learning_rate=0.1)
            b = TreeEnsemble("xgb_like", xgb.trees[:k], 3, base_score=xgb.base_score, learning_rate=0.1)
            np.testing.assert_allclose(a.predict(X), b.predict(X), rtol=0, atol=1e-9)

    def test_huge_gamma_collapses_to_base(self, rng):
        X, y = regression_data(rng)
        e = fit_xgb_like(X, y, EnsembleParams(ntrees=5, gamma=1e12))
        assert all(t.n_nodes == 1 for t in e.trees)
        np.testing.assert_allclose(e.predict(X), y.mean(), atol=1e-12)

    def test_huge_lambda_to_base(self, rng):
        X, y = regression_data(rng)
        e = fit_xgb_like(X, y, EnsembleParams(ntrees=5, reg_lambda=1e15))
        np.testing.assert_allclose(e.predict(X), y.mean(), atol=1e-9)

    def test_lambda_shrinks_leaves(self, rng):
        X, y = regression_data(rng)
        loose = fit_xgb_like(X, y, EnsembleParams(ntrees=1, reg_lambda=0.0, learning_rate=1.0))
        tight = fit_xgb_like(X, y, EnsembleParams(ntrees=1, reg_lambda=50.0, learning_rate=1.0))
        assert np.abs(tight.trees[0].value).max() < np.abs(loose.trees[0].value).max()

    def test_negative_lambda_rejected(self, rng):
        X, y = regression_data(rng)
        with pytest.raises(TreeError):
            fit_xgb_like(X, y, EnsembleParams(ntrees=1, reg_lambda=-1.0))


class TestPredict:
    def test_empty_boosting(self):
        e = TreeEnsemble("xgb_like", (), 2, base_score=4.5)
        assert predict(e, np.zeros((3, 2))).tolist() == [4.5] * 3

    def test_single_tree_raw(self, rng):
        X, y = regression_data(rng)
        e = fit_single_tree(X, y)
        np.testing.assert_array_equal(e.predict(X), e.trees[0].predict(X))

    def test_dimension_mismatch(self, rng):
        X, y = regression_data(rng)
        e = fit_single_tree(X, y)
        with pytest.raises(TreeError):
            e.predict(X[:, :2])

    def test_unknown_kind(self, rng):
        X, y = regression_data(rng)
        with pytest.raises(TreeError):
            fit_ensemble("lightgbm", X, y, EnsembleParams())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["single", "bagging", "random_forest"]))
def test_predictions_within_target_range(seed, kind):
    r = np.random.default_rng(seed)
    X, y = regression_data(r, 40)
    e = fit_ensemble(kind, X, y, EnsembleParams(ntrees=4, seed=seed))
    pred = e.predict(r.normal(scale=3, size=(50, 3)))
    assert pred.min() >= y.min() - 1e-12 and pred.max() <= y.max() + 1e-12


@pytest.mark.parametrize("kind", ["single", "bagging", "random_forest", "adaboost_r2", "gradient_boosting", "xgb_like"])
def test_every_kind_deterministic(kind, rng):
    X, y = regression_data(rng, 60)
    p = EnsembleParams(ntrees=5, seed=4)
    assert fit_ensemble(kind, X, y, p).predict(X).tobytes() == fit_ensemble(kind, X, y, p).predict(X).tobytes()
