"""Lloyd's k-means with k-means++ seeding, used for unknown-unknown injection."""

import numpy as np

from .base import BaseEstimator
from .validation import check_is_fitted, check_matrix


class KMeansConvergenceError(RuntimeError):
    pass


def _sq_dists(X, centers):
    return (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(centers * centers, axis=1)[None, :]
        - 2.0 * X @ centers.T
    )


def _plus_plus_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
            continue
        probs = closest / total
        centers[j] = X[rng.choice(n, p=probs)]
        closest = np.minimum(closest, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


class KMeans(BaseEstimator):
    """Seeded Lloyd iterations with a relative-inertia stopping rule.

    Raises KMeansConvergenceError if the tolerance is not reached within
    ``max_iter`` iterations. Emptied clusters keep their previous center.
    """

    def __init__(self, n_clusters=8, max_iter=100, tol=1e-4, random_state=0):
        if n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X):
        X = check_matrix(X)
        n = X.shape[0]
        if self.n_clusters > n:
            raise ValueError("more clusters than rows")
        rng = np.random.default_rng(self.random_state)
        centers = _plus_plus_init(X, self.n_clusters, rng)
        prev_inertia = np.inf
        for it in range(self.max_iter):
            d2 = _sq_dists(X, centers)
            labels = np.argmin(d2, axis=1)
            inertia = float(np.maximum(d2[np.arange(n), labels], 0.0).sum())
            for j in range(self.n_clusters):
                mask = labels == j
                if mask.any():
                    centers[j] = X[mask].mean(axis=0)
            if prev_inertia < np.inf:
                denom = max(prev_inertia, 1e-300)
                if abs(prev_inertia - inertia) / denom < self.tol or inertia == 0.0:
                    self.cluster_centers_ = centers
                    self.labels_ = labels
                    self.inertia_ = inertia
                    self.n_iter_ = it + 1
                    return self
            prev_inertia = inertia
        raise KMeansConvergenceError(
            f"k-means did not reach tol={self.tol} within {self.max_iter} iterations"
        )

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_matrix(X, n_features=self.cluster_centers_.shape[1])
        return np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)
