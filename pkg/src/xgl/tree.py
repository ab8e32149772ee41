"""CART decision trees with sample weights, grown greedily from scratch.

The classifier splits on weighted Gini impurity, the regressor on weighted
squared error. Split ties are broken by lowest feature index, then lowest
threshold. Trees are stored as flat arrays so prediction and leaf lookup
stay vectorized.
"""

import heapq

import numpy as np

from .base import BaseEstimator
from .validation import check_binary_labels, check_is_fitted, check_matrix, check_weights

_EPS = 1e-12


class Tree:
    """Flat array representation; ``feature == -1`` marks a leaf."""

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []  # class-1 weight fraction (clf) or weighted mean (reg)
        self.n_samples = []

    def add_node(self, value, n_samples):
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.n_samples.append(n_samples)
        return len(self.feature) - 1

    def make_split(self, node, feature, threshold, left, right):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right

    def freeze(self):
        self.feature = np.asarray(self.feature, dtype=np.intp)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.intp)
        self.right = np.asarray(self.right, dtype=np.intp)
        self.value = np.asarray(self.value, dtype=np.float64)
        self.n_samples = np.asarray(self.n_samples, dtype=np.intp)
        return self

    @property
    def n_leaves(self):
        return int(np.sum(self.feature == -1))

    def apply(self, X):
        """Leaf node id for every row."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            active = np.nonzero(self.feature[node] >= 0)[0]
            if active.size == 0:
                return node
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def decision_paths(self):
        """(node -> list of (feature, op, threshold)) for every leaf.

        Bounds along a path are merged per feature so each rule carries at
        most one '>' and one '<=' predicate per feature.
        """
        out = {}

        def walk(node, lower, upper):
            if self.feature[node] == -1:
                preds = []
                for f in sorted(set(lower) | set(upper)):
                    if f in lower:
                        preds.append((f, ">", lower[f]))
                    if f in upper:
                        preds.append((f, "<=", upper[f]))
                out[node] = preds
                return
            f, t = int(self.feature[node]), float(self.threshold[node])
            up = dict(upper)
            up[f] = min(up.get(f, np.inf), t)
            walk(self.left[node], lower, up)
            lo = dict(lower)
            lo[f] = max(lo.get(f, -np.inf), t)
            walk(self.right[node], lo, upper)

        walk(0, {}, {})
        return out


def _node_stats_clf(w, wy):
    W = float(w.sum())
    P = float(wy.sum())
    N = W - P
    return W, P, W - (P * P + N * N) / W


def _best_split(Xn, target, wn, min_leaf, classification):
    """Best (feature, threshold, score) over all features of one node.

    ``score`` is the summed child impurity (weighted Gini mass or SSE);
    the caller compares it to the parent impurity. Returns None when no
    valid split exists.
    """
    n, d = Xn.shape
    if n < 2 * min_leaf:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    xv = np.take_along_axis(Xn, order, axis=0)
    wv = wn[order]
    cw = np.cumsum(wv, axis=0)
    W = cw[-1]

    if classification:
        pv = (wn * target)[order]
        cp = np.cumsum(pv, axis=0)
        P = cp[-1]
        WL, PL = cw[:-1], cp[:-1]
        WR, PR = W - WL, P - PL
        NL, NR = WL - PL, WR - PR
        score = (WL - (PL * PL + NL * NL) / WL) + (WR - (PR * PR + NR * NR) / WR)
    else:
        sv = (wn * target)[order]
        qv = (wn * target * target)[order]
        cs = np.cumsum(sv, axis=0)
        cq = np.cumsum(qv, axis=0)
        S, Q = cs[-1], cq[-1]
        WL, SL, QL = cw[:-1], cs[:-1], cq[:-1]
        WR, SR, QR = W - WL, S - SL, Q - QL
        score = (QL - SL * SL / WL) + (QR - SR * SR / WR)

    valid = xv[:-1] < xv[1:]
    if min_leaf > 1:
        counts = np.arange(1, n)
        valid &= (counts >= min_leaf)[:, None] & (n - counts >= min_leaf)[:, None]
    if not valid.any():
        return None
    score = np.where(valid, score, np.inf)
    # column-major argmin: ties resolve to lowest feature, then lowest threshold
    flat = np.argmin(score.ravel(order="F"))
    j, i = divmod(flat, n - 1)
    best = float(score[i, j])
    if not np.isfinite(best):
        return None
    threshold = float((xv[i, j] + xv[i + 1, j]) / 2.0)
    return int(j), threshold, best


class _BaseTree(BaseEstimator):
    _classification = True

    def _check_targets(self, y, n):
        raise NotImplementedError

    def _leaf_value(self, target, wn):
        return float(np.sum(wn * target) / np.sum(wn))

    def fit(self, X, y, sample_weight=None):
        X = check_matrix(X)
        n = X.shape[0]
        y = self._check_targets(y, n)
        w = check_weights(sample_weight, n)

        tree = Tree()
        self._importance_gain = np.zeros(X.shape[1])
        root_idx = np.arange(n)
        root = tree.add_node(self._leaf_value(y[root_idx], w[root_idx]), n)

        if self.max_leaves is None:
            self._grow_depth_first(tree, X, y, w, root, root_idx, 0)
        else:
            self._grow_best_first(tree, X, y, w, root, root_idx)

        self.tree_ = tree.freeze()
        self.n_features_ = X.shape[1]
        total = self._importance_gain.sum()
        self.feature_importances_ = (
            self._importance_gain / total if total > 0 else self._importance_gain
        )
        return self

    def _node_impurity(self, target, wn):
        if self._classification:
            _, _, g = _node_stats_clf(wn, wn * target)
            return g
        W = wn.sum()
        S = (wn * target).sum()
        return float((wn * target * target).sum() - S * S / W)

    def _is_pure(self, target):
        return target.min() == target.max()

    def _grow_depth_first(self, tree, X, y, w, node, idx, depth):
        if depth >= self.max_depth or self._is_pure(y[idx]):
            return
        found = _best_split(X[idx], y[idx], w[idx], self.min_leaf, self._classification)
        if found is None:
            return
        j, t, child_score = found
        gain = self._node_impurity(y[idx], w[idx]) - child_score
        if gain <= _EPS:
            return
        self._importance_gain[j] += gain
        mask = X[idx, j] <= t
        li, ri = idx[mask], idx[~mask]
        left = tree.add_node(self._leaf_value(y[li], w[li]), len(li))
        right = tree.add_node(self._leaf_value(y[ri], w[ri]), len(ri))
        tree.make_split(node, j, t, left, right)
        self._grow_depth_first(tree, X, y, w, left, li, depth + 1)
        self._grow_depth_first(tree, X, y, w, right, ri, depth + 1)

    def _grow_best_first(self, tree, X, y, w, root, root_idx):
        counter = 0
        heap = []

        def push(node, idx, depth):
            nonlocal counter
            if depth >= self.max_depth or self._is_pure(y[idx]):
                return
            found = _best_split(X[idx], y[idx], w[idx], self.min_leaf, self._classification)
            if found is None:
                return
            j, t, child_score = found
            gain = self._node_impurity(y[idx], w[idx]) - child_score
            if gain <= _EPS:
                return
            heapq.heappush(heap, (-gain, counter, node, idx, depth, j, t))
            counter += 1

        push(root, root_idx, 0)
        n_leaves = 1
        while heap and n_leaves < self.max_leaves:
            neg_gain, _, node, idx, depth, j, t = heapq.heappop(heap)
            self._importance_gain[j] += -neg_gain
            mask = X[idx, j] <= t
            li, ri = idx[mask], idx[~mask]
            left = tree.add_node(self._leaf_value(y[li], w[li]), len(li))
            right = tree.add_node(self._leaf_value(y[ri], w[ri]), len(ri))
            tree.make_split(node, j, t, left, right)
            n_leaves += 1
            push(left, li, depth + 1)
            push(right, ri, depth + 1)

    def apply(self, X):
        check_is_fitted(self, "tree_")
        X = check_matrix(X, n_features=self.n_features_)
        return self.tree_.apply(X)


class DecisionTreeClassifier(_BaseTree):
    """Binary CART classifier on weighted Gini impurity.

    Parameters
    ----------
    max_depth : maximum tree depth (root is depth 0).
    min_leaf : minimum number of samples in each leaf.
    max_leaves : optional leaf budget; switches to best-first growth where
        the split with the largest impurity decrease is expanded first.
    """

    _classification = True

    def __init__(self, max_depth=6, min_leaf=1, max_leaves=None):
        if max_depth < 1 or min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_leaves = max_leaves

    def _check_targets(self, y, n):
        return check_binary_labels(y, n).astype(np.float64)

    def predict_proba(self, X):
        leaf = self.apply(X)
        p1 = self.tree_.value[leaf]
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)

    def decision_function(self, X):
        """Signed margin: positive-class probability gap in [-1, 1]."""
        proba = self.predict_proba(X)
        return proba[:, 1] - proba[:, 0]

    @property
    def n_leaves(self):
        check_is_fitted(self, "tree_")
        return self.tree_.n_leaves


class DecisionTreeRegressor(_BaseTree):
    """Weighted least-squares CART regressor (boosting workhorse)."""

    _classification = False

    def __init__(self, max_depth=3, min_leaf=1, max_leaves=None):
        if max_depth < 1 or min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_leaves = max_leaves

    def _check_targets(self, y, n):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (n,):
            raise ValueError("y must be 1-D and aligned with X")
        return y

    def predict(self, X):
        return self.tree_.value[self.apply(X)]
