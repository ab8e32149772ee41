"""Macro-F1, narrative bias, smoothing, and per-iteration metric series."""

from dataclasses import dataclass, field

import numpy as np


def _class_f1(pred, truth, positive):
    tp = int(np.sum((pred == positive) & (truth == positive)))
    fp = int(np.sum((pred == positive) & (truth != positive)))
    fn = int(np.sum((pred != positive) & (truth == positive)))
    if tp == 0 and fp == 0 and fn == 0:
        # class absent from both truth and prediction
        return 1.0
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def macro_f1(predictions, truth):
    """Unweighted mean of the per-class F1 scores of a binary task.

    A class absent from both vectors scores 1; a class with true members
    but no correct prediction scores 0.
    """
    pred = np.asarray(predictions).astype(np.int64)
    true = np.asarray(truth).astype(np.int64)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise ValueError("empty inputs")
    return 0.5 * (_class_f1(pred, true, 0) + _class_f1(pred, true, 1))


def trailing_mean(series, window):
    """Trailing moving average; window 1 is the identity."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    out = np.empty_like(x)
    csum = np.cumsum(x)
    for t in range(len(x)):
        lo = max(0, t - window + 1)
        out[t] = (csum[t] - (csum[lo - 1] if lo > 0 else 0.0)) / (t - lo + 1)
    return out


def query_f1_series(query_pred, query_true):
    """Cumulative macro-F1 of the query narrative after 1..T queries."""
    qp = np.asarray(query_pred).astype(np.int64)
    qt = np.asarray(query_true).astype(np.int64)
    if qp.shape != qt.shape or qp.ndim != 1:
        raise ValueError("query vectors must be 1-D and equally long")
    if qp.size == 0:
        raise ValueError("empty query log")
    return np.array([macro_f1(qp[: t + 1], qt[: t + 1]) for t in range(len(qp))])


def narrative_bias_experimental(query_pred, query_true, test_f1_at_t, window=5):
    """Smoothed query-narrative F1 minus test F1 at the current iteration.

    Positive values mean the narrative oversells the model. The query F1 is
    the cumulative macro-F1 over all queries so far, trailing-mean smoothed.
    """
    raw = query_f1_series(query_pred, query_true)
    smoothed = trailing_mean(raw, window)
    return float(smoothed[-1]) - float(test_f1_at_t)


def narrative_bias_formal(query_losses, model, X_test, y_test):
    """Mean 0-1 loss on the queries minus the model's empirical test risk.

    Under this orientation a flattering narrative (low query loss) on a bad
    model is negative; the experimental proxy above flips the sign so that
    overselling reads positive. Both are reported by the harness.
    """
    losses = np.asarray(query_losses, dtype=np.float64)
    if losses.size == 0:
        raise ValueError("empty query losses")
    y_test = np.asarray(y_test).astype(np.int64)
    risk = float(np.mean(model.predict(X_test) != y_test))
    return float(np.mean(losses)) - risk


@dataclass
class MetricSeries:
    """Per-iteration metrics of one interactive run.

    Two readings of the query narrative are tracked. ``nb_experimental``
    follows the cumulative-macro-F1 convention (smoothed query-log F1 minus
    test F1). ``nb_narrative`` compares the smoothed per-query correctness
    to the test F1; a single query's macro-F1 is exactly its 0/1
    correctness, so this is the per-iteration reading of the same quantity
    and is what the summary tables aggregate.
    """

    iterations: np.ndarray
    test_macro_f1: np.ndarray
    query_macro_f1: np.ndarray
    query_macro_f1_smoothed: np.ndarray
    query_correct_smoothed: np.ndarray
    nb_experimental: np.ndarray
    nb_narrative: np.ndarray
    nb_formal: np.ndarray
    fidelity: np.ndarray
    n_rules: np.ndarray
    dataset: str = ""
    strategy: str = ""
    fold: int = -1
    seed: int = -1
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.iterations)
        for name in (
            "test_macro_f1",
            "query_macro_f1",
            "query_macro_f1_smoothed",
            "query_correct_smoothed",
            "nb_experimental",
            "nb_narrative",
            "nb_formal",
            "fidelity",
            "n_rules",
        ):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length != iterations length")
        if n and not np.array_equal(self.iterations, np.arange(1, n + 1)):
            raise ValueError("iterations must be contiguous from 1")
        for name in ("test_macro_f1", "query_macro_f1"):
            v = getattr(self, name)
            ok = np.isnan(v) | ((v >= 0.0) & (v <= 1.0))
            if not ok.all():
                raise ValueError(f"{name} outside [0, 1]")
        for name in ("nb_experimental", "nb_narrative"):
            nb = getattr(self, name)
            ok = np.isnan(nb) | ((nb >= -1.0) & (nb <= 1.0))
            if not ok.all():
                raise ValueError(f"{name} outside [-1, 1]")

    @property
    def mean_f1(self):
        return float(np.mean(self.test_macro_f1))

    @property
    def mean_nb(self):
        vals = self.nb_narrative[~np.isnan(self.nb_narrative)]
        return float(np.mean(vals)) if vals.size else float("nan")

    @property
    def mean_nb_cumulative(self):
        raw = self.query_macro_f1 - self.test_macro_f1
        raw = raw[~np.isnan(raw)]
        return float(np.mean(raw)) if raw.size else float("nan")


def build_series(
    query_pred,
    query_true,
    test_f1,
    test_err,
    fidelity=None,
    n_rules=None,
    window=5,
    **tags,
):
    """Assemble a MetricSeries from raw per-iteration run outputs."""
    test_f1 = np.asarray(test_f1, dtype=np.float64)
    n = len(test_f1)
    qp = np.asarray(query_pred).astype(np.int64)
    qt = np.asarray(query_true).astype(np.int64)
    if len(qp) != n or len(np.asarray(test_err)) != n:
        raise ValueError("per-iteration inputs must align")
    raw = query_f1_series(qp, qt)
    smoothed = trailing_mean(raw, window)
    correct = (qp == qt).astype(np.float64)
    correct_smoothed = trailing_mean(correct, window)
    cum_loss = np.cumsum(1.0 - correct) / np.arange(1, n + 1)
    nb_formal = cum_loss - np.asarray(test_err, dtype=np.float64)
    nan = np.full(n, np.nan)
    return MetricSeries(
        iterations=np.arange(1, n + 1),
        test_macro_f1=test_f1,
        query_macro_f1=raw,
        query_macro_f1_smoothed=smoothed,
        query_correct_smoothed=correct_smoothed,
        nb_experimental=smoothed - test_f1,
        nb_narrative=correct_smoothed - test_f1,
        nb_formal=nb_formal,
        fidelity=nan if fidelity is None else np.asarray(fidelity, dtype=np.float64),
        n_rules=np.full(n, -1) if n_rules is None else np.asarray(n_rules),
        **tags,
    )


def aggregate_cell(series_list):
    """Table cell for one (dataset, strategy): mean over runs of
    per-run iteration means, plus the across-run std of mean F1."""
    if not series_list:
        raise ValueError("no series to aggregate")
    f1s = np.array([s.mean_f1 for s in series_list])
    nbs = np.array([s.mean_nb for s in series_list])
    nbs = nbs[~np.isnan(nbs)]
    nbc = np.array([s.mean_nb_cumulative for s in series_list])
    nbc = nbc[~np.isnan(nbc)]
    return {
        "mean_f1": float(np.mean(f1s)),
        "std_f1": float(np.std(f1s)),
        "mean_nb": float(np.mean(nbs)) if nbs.size else float("nan"),
        "mean_nb_cumulative": float(np.mean(nbc)) if nbc.size else float("nan"),
        "n_runs": len(series_list),
    }
