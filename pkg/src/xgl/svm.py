"""Binary RBF-kernel SVM trained with sequential minimal optimization.

Per-example box constraints ``C * sample_weight`` implement cost-sensitive
fitting. Class probabilities are a logistic squashing of the signed margin,
which preserves the margin ranking that the query strategies rely on.
"""

import numpy as np

from .base import BaseEstimator
from .validation import check_binary_labels, check_is_fitted, check_matrix, check_weights

_STEP_EPS = 1e-10


def rbf_kernel(A, B, gamma):
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class SMOClassifier(BaseEstimator):
    """SVM dual solver following Platt's SMO with an error cache.

    Parameters
    ----------
    C : soft-margin penalty; the effective box for example i is C * w_i.
    gamma : RBF kernel width, K(x, z) = exp(-gamma * ||x - z||^2).
    tol : KKT violation tolerance used both for pair selection and stopping.
    max_pass_factor : hard cap of ``factor * n`` sweeps; if reached the best
        iterate so far is kept and ``converged_`` is False.
    random_state : seed for the scan-order randomization.
    """

    def __init__(self, C=1.0, gamma=1.0, tol=1e-3, max_pass_factor=10, random_state=0):
        if C <= 0 or gamma <= 0:
            raise ValueError("C and gamma must be positive")
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_pass_factor = max_pass_factor
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None):
        X = check_matrix(X)
        n = X.shape[0]
        y01 = check_binary_labels(y, n)
        if y01.min() == y01.max():
            raise ValueError("training data contains a single class")
        w = check_weights(sample_weight, n)
        rng = np.random.default_rng(self.random_state)

        Y = np.where(y01 == 1, 1.0, -1.0)
        Cbox = self.C * w
        K = rbf_kernel(X, X, self.gamma)
        alpha = np.zeros(n)
        self._b = 0.0
        E = -Y.copy()  # f(x) - y with f == 0 initially

        def take_step(i1, i2):
            if i1 == i2:
                return False
            a1, a2 = alpha[i1], alpha[i2]
            y1, y2 = Y[i1], Y[i2]
            C1, C2 = Cbox[i1], Cbox[i2]
            E1, E2 = E[i1], E[i2]
            s = y1 * y2
            if s < 0:
                L, H = max(0.0, a2 - a1), min(C2, C1 + a2 - a1)
            else:
                L, H = max(0.0, a1 + a2 - C1), min(C2, a1 + a2)
            if L >= H - _STEP_EPS:
                return False
            k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
            eta = k11 + k22 - 2.0 * k12
            if eta > _STEP_EPS:
                a2new = a2 + y2 * (E1 - E2) / eta
                a2new = min(max(a2new, L), H)
            else:
                # flat direction (duplicate points): objective is linear in
                # alpha2, evaluate both ends
                f1 = y1 * (E1 + self._b) - a1 * k11 - s * a2 * k12
                f2 = y2 * (E2 + self._b) - s * a1 * k12 - a2 * k22
                L1 = a1 + s * (a2 - L)
                H1 = a1 + s * (a2 - H)
                objL = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
                objH = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
                if objL < objH - _STEP_EPS:
                    a2new = L
                elif objH < objL - _STEP_EPS:
                    a2new = H
                else:
                    return False
            if abs(a2new - a2) < _STEP_EPS * (a2new + a2 + _STEP_EPS):
                return False
            a1new = a1 + s * (a2 - a2new)
            a1new = min(max(a1new, 0.0), C1)

            d1, d2 = y1 * (a1new - a1), y2 * (a2new - a2)
            b1 = self._b - E1 - d1 * k11 - d2 * k12
            b2 = self._b - E2 - d1 * k12 - d2 * k22
            if 0.0 < a1new < C1:
                bnew = b1
            elif 0.0 < a2new < C2:
                bnew = b2
            else:
                bnew = 0.5 * (b1 + b2)
            np.add(E, d1 * K[i1] + d2 * K[i2] + (bnew - self._b), out=E)
            alpha[i1], alpha[i2] = a1new, a2new
            self._b = bnew
            return True

        def examine(i2):
            r2 = E[i2] * Y[i2]
            if not (
                (r2 < -self.tol and alpha[i2] < Cbox[i2])
                or (r2 > self.tol and alpha[i2] > 0.0)
            ):
                return 0
            nonbound = np.nonzero((alpha > 0.0) & (alpha < Cbox))[0]
            if nonbound.size > 1:
                i1 = nonbound[np.argmax(np.abs(E[nonbound] - E[i2]))]
                if take_step(int(i1), i2):
                    return 1
            if nonbound.size:
                start = rng.integers(nonbound.size)
                for i1 in np.roll(nonbound, -start):
                    if take_step(int(i1), i2):
                        return 1
            start = rng.integers(n)
            for i1 in np.roll(np.arange(n), -start):
                if take_step(int(i1), i2):
                    return 1
            return 0

        max_sweeps = int(self.max_pass_factor * n)
        examine_all = True
        self.converged_ = False
        for _ in range(max_sweeps):
            if examine_all:
                targets = range(n)
            else:
                targets = np.nonzero((alpha > 0.0) & (alpha < Cbox))[0]
            changed = 0
            for i2 in targets:
                changed += examine(int(i2))
            if examine_all:
                if changed == 0:
                    self.converged_ = True
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True

        support = alpha > 0.0
        self.support_vectors_ = X[support]
        self.dual_coef_ = (alpha * Y)[support]
        self.intercept_ = float(self._b)
        self._train_X = X
        self._train_Y = Y
        self._alpha = alpha
        self._Cbox = Cbox
        self.n_features_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "support_vectors_")
        X = check_matrix(X, n_features=self.n_features_)
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        K = rbf_kernel(X, self.support_vectors_, self.gamma)
        return K @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        # strict inequality keeps predict == argmax(predict_proba) at f == 0
        return (self.decision_function(X) > 0.0).astype(np.int64)

    def predict_proba(self, X):
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def kkt_violation(self):
        """Largest KKT violation over the training set (0 means exact)."""
        check_is_fitted(self, "support_vectors_")
        f = (
            rbf_kernel(self._train_X, self._train_X, self.gamma)
            @ (self._alpha * self._train_Y)
            + self.intercept_
        )
        r = self._train_Y * f
        viol = np.zeros_like(r)
        free = (self._alpha > 0.0) & (self._alpha < self._Cbox)
        at_zero = self._alpha == 0.0
        at_c = self._alpha >= self._Cbox
        viol[at_zero] = np.maximum(0.0, 1.0 - r[at_zero])
        viol[at_c] = np.maximum(0.0, r[at_c] - 1.0)
        viol[free] = np.abs(r[free] - 1.0)
        return float(viol.max())
