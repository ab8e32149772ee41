import numpy as np
import pytest

from xgl.tree import DecisionTreeClassifier, DecisionTreeRegressor


def _random_task(seed, n=80, d=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = ((X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.normal(size=n)) > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


class TestClassifier:
    def test_memorizes_separable_data(self):
        X, y = _random_task(0)
        clf = DecisionTreeClassifier(max_depth=20, min_leaf=1).fit(X, y)
        assert (clf.predict(X) == y).all()

    def test_weight_scaling_preserves_structure(self):
        X, y = _random_task(1)
        rng = np.random.default_rng(2)
        w = rng.uniform(0.5, 3.0, size=len(y))
        a = DecisionTreeClassifier(max_depth=4, min_leaf=2).fit(X, y, sample_weight=w)
        b = DecisionTreeClassifier(max_depth=4, min_leaf=2).fit(X, y, sample_weight=2 * w)
        assert np.array_equal(a.tree_.feature, b.tree_.feature)
        assert np.allclose(a.tree_.threshold, b.tree_.threshold, equal_nan=True)

    @staticmethod
    def _is_refinement(shallow, deep):
        ts, td = shallow.tree_, deep.tree_

        def walk(ns, nd):
            if ts.feature[ns] == -1:
                return True  # deep may split further below a shallow leaf
            if td.feature[nd] == -1:
                return False
            if ts.feature[ns] != td.feature[nd] or ts.threshold[ns] != td.threshold[nd]:
                return False
            return walk(ts.left[ns], td.left[nd]) and walk(ts.right[ns], td.right[nd])

        return walk(0, 0)

    def test_deeper_tree_refines_shallower(self):
        # greedy splits do not depend on the depth budget: the depth-d tree
        # is a structural prefix of the depth-(d+1) tree, so training
        # accuracy is non-decreasing in depth at fixed min_leaf
        X, y = _random_task(3, n=120)
        prev_acc = 0.0
        prev = None
        for depth in range(1, 7):
            clf = DecisionTreeClassifier(max_depth=depth, min_leaf=2).fit(X, y)
            acc = float(np.mean(clf.predict(X) == y))
            assert acc >= prev_acc - 1e-12
            if prev is not None:
                assert self._is_refinement(prev, clf)
            prev_acc, prev = acc, clf

    def test_split_tiebreak_prefers_lowest_feature(self):
        # two identical columns: the split must use feature 0
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0, 0, 1, 1])
        clf = DecisionTreeClassifier(max_depth=1).fit(X, y)
        assert clf.tree_.feature[0] == 0
        assert clf.tree_.threshold[0] == pytest.approx(1.5)

    def test_predict_proba_sums_to_one(self):
        X, y = _random_task(4)
        clf = DecisionTreeClassifier(max_depth=3, min_leaf=3).fit(X, y)
        proba = clf.predict_proba(X)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        assert np.array_equal(clf.predict(X), np.argmax(proba, axis=1))

    def test_min_leaf_respected(self):
        X, y = _random_task(5, n=64)
        clf = DecisionTreeClassifier(max_depth=10, min_leaf=7).fit(X, y)
        leaves = clf.apply(X)
        _, counts = np.unique(leaves, return_counts=True)
        assert counts.min() >= 7

    def test_max_leaves_best_first(self):
        X, y = _random_task(6, n=200)
        clf = DecisionTreeClassifier(max_depth=12, min_leaf=1, max_leaves=5).fit(X, y)
        assert clf.n_leaves <= 5

    def test_pure_node_stops(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([1, 1, 1])
        clf = DecisionTreeClassifier(max_depth=5).fit(X, y)
        assert clf.n_leaves == 1

    def test_feature_importances_sum_to_one(self):
        X, y = _random_task(7)
        clf = DecisionTreeClassifier(max_depth=5, min_leaf=2).fit(X, y)
        assert clf.feature_importances_.sum() == pytest.approx(1.0)

    def test_dimension_mismatch_rejected(self):
        X, y = _random_task(8)
        clf = DecisionTreeClassifier(max_depth=2).fit(X, y)
        with pytest.raises(ValueError):
            clf.predict(X[:, :2])

    def test_gini_split_matches_bruteforce(self):
        # exhaustive oracle: best weighted-gini split over all features and
        # midpoints must match the root split the tree picked
        rng = np.random.default_rng(9)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 2, size=40)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        w = rng.uniform(0.5, 2.0, size=40)

        def gini_mass(mask):
            W = w[mask].sum()
            if W == 0:
                return 0.0
            p = (w[mask] * y[mask]).sum() / W
            return W * 2 * p * (1 - p)

        best = (np.inf, None, None)
        for j in range(3):
            vals = np.unique(X[:, j])
            for lo, hi in zip(vals[:-1], vals[1:]):
                thr = (lo + hi) / 2
                mask = X[:, j] <= thr
                score = gini_mass(mask) + gini_mass(~mask)
                if score < best[0] - 1e-12:
                    best = (score, j, thr)
        clf = DecisionTreeClassifier(max_depth=1, min_leaf=1).fit(X, y, sample_weight=w)
        assert clf.tree_.feature[0] == best[1]
        assert clf.tree_.threshold[0] == pytest.approx(best[2])


class TestRegressor:
    def test_fits_piecewise_constant(self):
        X = np.linspace(0, 1, 50).reshape(-1, 1)
        y = np.where(X[:, 0] < 0.5, 2.0, -1.0)
        reg = DecisionTreeRegressor(max_depth=1).fit(X, y)
        assert np.allclose(reg.predict(X), y)

    def test_weighted_leaf_means(self):
        X = np.array([[0.0], [0.0], [1.0]])
        y = np.array([0.0, 1.0, 5.0])
        w = np.array([1.0, 3.0, 1.0])
        reg = DecisionTreeRegressor(max_depth=1).fit(X, y, sample_weight=w)
        # left leaf weighted mean = (0*1 + 1*3) / 4
        assert reg.predict(np.array([[0.0]]))[0] == pytest.approx(0.75)

    def test_sse_never_increases_with_depth(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(100, 2))
        y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=100)
        prev = np.inf
        for depth in range(1, 6):
            reg = DecisionTreeRegressor(max_depth=depth, min_leaf=2).fit(X, y)
            sse = float(np.sum((reg.predict(X) - y) ** 2))
            assert sse <= prev + 1e-9
            prev = sse
