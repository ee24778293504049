import numpy as np
import pytest

from cbdetect.errors import DataError, ModelFormatError
from cbdetect.models.forest import (
    Forest,
    RFConfig,
    forest_arrays,
    forest_from_arrays,
    forest_probs,
    predict_forest,
    train_random_forest,
)
from oracles import BruteTree
from synth import margin_blobs


class TestConfig:
    def test_validation(self):
        with pytest.raises(DataError):
            RFConfig(n_estimators=0)
        with pytest.raises(DataError):
            RFConfig(n_estimators=1, max_features="log2")
        with pytest.raises(DataError):
            RFConfig(n_estimators=1, max_features=0)
        with pytest.raises(DataError):
            RFConfig(n_estimators=1, max_depth=0)


class TestTraining:
    def test_separable_data_fits(self):
        X, y = margin_blobs(120, dim=4, gap=4.0, seed=6)
        f = train_random_forest(X, y, RFConfig(n_estimators=15, seed=0))
        pred = (forest_probs(f, X) > 0.5).astype(int)
        assert (pred == y).mean() > 0.98

    def test_same_seed_same_forest(self):
        X, y = margin_blobs(60, seed=7)
        cfg = RFConfig(n_estimators=8, seed=3)
        a = train_random_forest(X, y, cfg)
        b = train_random_forest(X, y, cfg)
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)

    def test_jobs_do_not_change_result(self):
        X, y = margin_blobs(60, seed=8)
        serial = train_random_forest(X, y, RFConfig(n_estimators=7, seed=1, n_jobs=1))
        threaded = train_random_forest(X, y, RFConfig(n_estimators=7, seed=1, n_jobs=3))
        for ta, tb in zip(serial.trees, threaded.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)
            assert np.array_equal(ta.count0, tb.count0)

    def test_max_depth_limits_tree(self):
        X, y = margin_blobs(200, dim=5, gap=0.5, seed=9)
        f = train_random_forest(X, y, RFConfig(n_estimators=3, seed=0, max_depth=2))

        def depth(tree, i=0):
            if tree.feature[i] < 0:
                return 0
            return 1 + max(depth(tree, tree.left[i]), depth(tree, tree.right[i]))

        assert all(depth(t) <= 2 for t in f.trees)

    def test_min_samples_leaf_respected(self):
        X, y = margin_blobs(80, dim=3, gap=0.5, seed=10)
        f = train_random_forest(X, y, RFConfig(n_estimators=3, seed=0, min_samples_leaf=10))
        for t in f.trees:
            leaves = t.feature < 0
            sizes = t.count0[leaves] + t.count1[leaves]
            assert sizes.min() >= 10

    def test_bad_labels_raise(self):
        X = np.zeros((4, 2))
        with pytest.raises(DataError):
            train_random_forest(X, np.array([0, 1, 2, 0]), RFConfig(n_estimators=1))


class TestTreeAgainstOracle:
    def test_single_tree_predictions_match_brute_force(self):
        # bootstrap off and all features considered makes the tree fully
        # deterministic, so the fast builder must agree with the recursive one
        rng = np.random.default_rng(11)
        for trial in range(8):
            n = int(rng.integers(20, 70))
            X = np.round(rng.normal(size=(n, 3)), 1)
            y = (X[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(np.int64)
            min_leaf = int(rng.integers(1, 4))
            cfg = RFConfig(
                n_estimators=1,
                max_features="all",
                min_samples_leaf=min_leaf,
                bootstrap=False,
                seed=trial,
            )
            f = train_random_forest(X, y, cfg)
            oracle = BruteTree(min_leaf=min_leaf).fit(X, y)
            probe = np.round(rng.normal(size=(300, 3)), 1)
            mine = np.array([f.trees[0].predict_label(p) for p in probe])
            assert np.array_equal(mine, oracle.predict(probe))


class TestPrediction:
    def test_vote_fraction_and_tie_to_zero(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        f = train_random_forest(
            X, y, RFConfig(n_estimators=2, max_features="all", bootstrap=False, seed=0)
        )
        prob, label = predict_forest(f, np.array([0.0]))
        assert prob == 0.0 and label == 0
        prob, label = predict_forest(f, np.array([1.0]))
        assert prob == 1.0 and label == 1

    def test_half_vote_is_class_zero(self):
        # exact 0.5 vote fraction must not flip to clickbait
        X, y = margin_blobs(30, seed=12)
        f = train_random_forest(X, y, RFConfig(n_estimators=2, seed=0))
        t0, t1 = f.trees
        probe = None
        for x in np.random.default_rng(1).normal(size=(500, 4)) * 3:
            if t0.predict_label(x) != t1.predict_label(x):
                probe = x
                break
        if probe is not None:
            prob, label = predict_forest(f, probe)
            assert prob == 0.5 and label == 0

    def test_wrong_width_raises(self):
        X, y = margin_blobs(30, seed=13)
        f = train_random_forest(X, y, RFConfig(n_estimators=1, seed=0))
        with pytest.raises(DataError):
            predict_forest(f, np.zeros(9))


class TestSerialization:
    def test_array_round_trip(self):
        X, y = margin_blobs(50, seed=14)
        f = train_random_forest(X, y, RFConfig(n_estimators=4, seed=2))
        back = forest_from_arrays(f.config, f.n_features, forest_arrays(f))
        probe = np.random.default_rng(3).normal(size=(100, 4)) * 2
        assert np.array_equal(forest_probs(f, probe), forest_probs(back, probe))

    def test_missing_array_raises(self):
        X, y = margin_blobs(30, seed=15)
        f = train_random_forest(X, y, RFConfig(n_estimators=2, seed=0))
        arrays = forest_arrays(f)
        del arrays["tree1.threshold"]
        with pytest.raises(ModelFormatError):
            forest_from_arrays(f.config, f.n_features, arrays)
