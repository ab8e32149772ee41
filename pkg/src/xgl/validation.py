"""Input validation helpers shared by all estimators and operations."""

import numpy as np


class NotFittedError(RuntimeError):
    pass


def check_matrix(X, name="X", n_features=None):
    """Coerce to a 2-D float64 array and reject NaN/inf."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"{name} has {X.shape[1]} features, expected {n_features}"
        )
    return X


def check_binary_labels(y, n_rows=None, name="y"):
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional")
    y = y.astype(np.int64)
    if not np.isin(y, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 labels")
    if n_rows is not None and y.shape[0] != n_rows:
        raise ValueError(f"{name} has {y.shape[0]} rows, expected {n_rows}")
    return y


def check_weights(w, n_rows, name="sample_weight"):
    if w is None:
        return np.ones(n_rows, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n_rows,):
        raise ValueError(f"{name} has shape {w.shape}, expected ({n_rows},)")
    if not np.isfinite(w).all() or (w <= 0).any():
        raise ValueError(f"{name} must be strictly positive and finite")
    return w


def check_is_fitted(estimator, attribute):
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted (missing {attribute!r})"
        )


def rng_from_seed(seed):
    """Deterministic Generator from an integer seed (None allowed)."""
    return np.random.default_rng(seed)


def child_seed(seed, *key):
    """Stable, order-independent derived seed for a sub-stream.

    Used so that independently replayed components (library loop, live
    service session) draw identical randomness for the same (seed, key).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
