import numpy as np
import pytest

from xgl.boosting import GradientBoostingClassifier


def _task(seed, n=100, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = ((X[:, 0] - X[:, 1] ** 2 + 0.3 * rng.normal(size=n)) > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


class TestBoosting:
    def test_zero_rounds_predicts_weighted_base_rate(self):
        X = np.arange(8, dtype=float).reshape(-1, 1)
        y = np.array([1, 1, 0, 0, 0, 0, 0, 0])
        w = np.array([3.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        clf = GradientBoostingClassifier(n_rounds=0).fit(X, y, sample_weight=w)
        base = (3 + 3) / (6 + 6)
        assert np.allclose(clf.predict_proba(X)[:, 1], base, atol=1e-12)

    def test_train_loss_non_increasing(self):
        for seed in range(5):
            X, y = _task(seed)
            rng = np.random.default_rng(seed + 100)
            w = rng.uniform(0.5, 4.0, size=len(y))
            clf = GradientBoostingClassifier(n_rounds=60, max_depth=3).fit(X, y, sample_weight=w)
            losses = np.array(clf.train_losses_)
            assert (np.diff(losses) <= 1e-10).all()

    def test_fits_training_data(self):
        X, y = _task(1)
        clf = GradientBoostingClassifier(n_rounds=100, max_depth=3).fit(X, y)
        assert np.mean(clf.predict(X) == y) >= 0.97

    def test_probabilities_valid_and_consistent(self):
        X, y = _task(2)
        clf = GradientBoostingClassifier(n_rounds=30).fit(X, y)
        proba = clf.predict_proba(X)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        assert np.array_equal(clf.predict(X), np.argmax(proba, axis=1))

    def test_deterministic(self):
        X, y = _task(3)
        a = GradientBoostingClassifier(n_rounds=25).fit(X, y)
        b = GradientBoostingClassifier(n_rounds=25).fit(X, y)
        assert np.array_equal(a.decision_function(X), b.decision_function(X))

    def test_weighted_examples_pull_the_boundary(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 1, 1])
        w = np.array([1.0, 30.0, 1.0, 1.0])
        clf = GradientBoostingClassifier(n_rounds=40, max_depth=1).fit(X, y, sample_weight=w)
        assert clf.predict(np.array([[1.0]]))[0] == 0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            GradientBoostingClassifier().fit(np.zeros((3, 1)), [0, 0, 0])

    def test_separable_pair(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        clf = GradientBoostingClassifier(n_rounds=50, max_depth=1).fit(X, y)
        assert (clf.predict(X) == y).all()
