"""Stagewise additive logistic boosting with depth-limited regression trees.

Each round fits a weighted least-squares tree to the residual y - p and
replaces leaf values with a damped Newton step on the weighted log-loss.
"""

import numpy as np

from .base import BaseEstimator
from .tree import DecisionTreeRegressor
from .validation import check_binary_labels, check_is_fitted, check_matrix, check_weights

_PCLIP = 1e-12
_LEAF_CLIP = 8.0


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def weighted_log_loss(y, p, w):
    p = np.clip(p, _PCLIP, 1.0 - _PCLIP)
    ll = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(np.sum(w * ll) / np.sum(w))


class GradientBoostingClassifier(BaseEstimator):
    """Binary gradient boosted trees on weighted log-loss.

    Parameters
    ----------
    n_rounds : number of boosting rounds; 0 keeps only the prior score.
    max_depth : depth of each regression tree.
    learning_rate : shrinkage applied to every leaf update.
    min_leaf : minimum samples per tree leaf.
    """

    def __init__(self, n_rounds=100, max_depth=3, learning_rate=0.1, min_leaf=1):
        if n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf

    def fit(self, X, y, sample_weight=None):
        X = check_matrix(X)
        n = X.shape[0]
        y = check_binary_labels(y, n).astype(np.float64)
        w = check_weights(sample_weight, n)
        if y.min() == y.max():
            raise ValueError("training data contains a single class")

        base = np.sum(w * y) / np.sum(w)
        base = min(max(base, _PCLIP), 1.0 - _PCLIP)
        self.base_score_ = float(np.log(base / (1.0 - base)))

        F = np.full(n, self.base_score_)
        self.trees_ = []
        self.train_losses_ = [weighted_log_loss(y, _sigmoid(F), w)]
        for _ in range(self.n_rounds):
            p = _sigmoid(F)
            residual = y - p
            tree = DecisionTreeRegressor(
                max_depth=self.max_depth, min_leaf=self.min_leaf
            ).fit(X, residual, sample_weight=w)
            leaf = tree.apply(X)
            size = len(tree.tree_.value)
            grad = np.bincount(leaf, weights=w * residual, minlength=size)
            hess = np.bincount(leaf, weights=w * p * (1.0 - p), minlength=size)
            gamma = grad / np.maximum(hess, 1e-9)
            np.clip(gamma, -_LEAF_CLIP, _LEAF_CLIP, out=gamma)
            tree.tree_.value = gamma
            F += self.learning_rate * gamma[leaf]
            self.trees_.append(tree)
            self.train_losses_.append(weighted_log_loss(y, _sigmoid(F), w))
        self.n_features_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "base_score_")
        X = check_matrix(X, n_features=self.n_features_)
        F = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            F += self.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X):
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)
