import numpy as np
import pytest
from hypothesis import given, strategies as st

from xgl.metrics import (
    aggregate_cell,
    build_series,
    macro_f1,
    narrative_bias_experimental,
    narrative_bias_formal,
    query_f1_series,
    trailing_mean,
)


class TestMacroF1:
    def test_perfect_predictions(self):
        assert macro_f1([1, 0, 1, 0], [1, 0, 1, 0]) == 1.0

    def test_all_negative_on_half_positive_truth(self):
        # F1+ = 0; F1- = 2*(0.5*1)/(0.5+1) = 2/3; macro = 1/3
        got = macro_f1([0, 0, 0, 0], [1, 1, 0, 0])
        assert got == pytest.approx(1 / 3)

    def test_class_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = rng.integers(0, 2, size=30)
            t = rng.integers(0, 2, size=30)
            assert macro_f1(p, t) == pytest.approx(macro_f1(1 - p, 1 - t))

    def test_absent_class_counts_as_one(self):
        # all-negative truth and predictions: positive class absent from both
        assert macro_f1([0, 0], [0, 0]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            macro_f1([0, 1], [0])

    def test_empty(self):
        with pytest.raises(ValueError):
            macro_f1([], [])

    @given(
        st.lists(st.integers(0, 1), min_size=1, max_size=40),
        st.data(),
    )
    def test_bounds_and_swap_consistency(self, truth, data):
        pred = data.draw(st.lists(st.integers(0, 1), min_size=len(truth), max_size=len(truth)))
        v = macro_f1(pred, truth)
        assert 0.0 <= v <= 1.0
        assert macro_f1([1 - p for p in pred], [1 - t for t in truth]) == pytest.approx(v)


class TestSmoothing:
    def test_window_one_is_identity(self):
        x = [0.2, 0.9, 0.4, 0.7]
        assert np.allclose(trailing_mean(x, 1), x)

    def test_trailing_window(self):
        got = trailing_mean([1.0, 0.0, 1.0, 1.0], 2)
        assert np.allclose(got, [1.0, 0.5, 0.5, 1.0])

    def test_window_larger_than_series(self):
        got = trailing_mean([1.0, 0.0], 10)
        assert np.allclose(got, [1.0, 0.5])


class TestNarrativeBiasExperimental:
    def test_identical_series_zero(self):
        pred = [1, 0, 1, 0, 1]
        true = list(pred)
        f1 = query_f1_series(pred, true)
        for t in range(len(pred)):
            nb = narrative_bias_experimental(pred[: t + 1], true[: t + 1], f1[t], window=5)
            assert nb == pytest.approx(0.0)

    def test_all_wrong_gives_minus_test_f1(self):
        pred = [1, 1, 1, 1]
        true = [0, 0, 0, 0]
        nb = narrative_bias_experimental(pred, true, 0.8, window=1)
        assert nb == pytest.approx(-0.8)

    def test_antisymmetric_under_series_swap(self):
        pred, true = [1, 0, 1], [1, 1, 0]
        q = query_f1_series(pred, true)[-1]
        assert narrative_bias_experimental(pred, true, q, window=1) == pytest.approx(0.0)
        nb_hi = narrative_bias_experimental(pred, true, q - 0.2, window=1)
        nb_lo = narrative_bias_experimental(pred, true, q + 0.2, window=1)
        assert nb_hi == pytest.approx(-nb_lo)

    def test_empty_log_rejected(self):
        with pytest.raises(ValueError):
            narrative_bias_experimental([], [], 0.5)


class _ConstModel:
    def __init__(self, labels):
        self.labels = np.asarray(labels)

    def predict(self, X):
        return self.labels


class TestNarrativeBiasFormal:
    def test_zero_losses_zero_risk(self):
        model = _ConstModel([1, 0])
        assert narrative_bias_formal([0, 0], model, np.zeros((2, 1)), [1, 0]) == 0.0

    def test_zero_losses_nonzero_risk(self):
        # model wrong on 30% of test rows
        model = _ConstModel([1] * 10)
        truth = [1] * 7 + [0] * 3
        got = narrative_bias_formal([0, 0, 0], model, np.zeros((10, 1)), truth)
        assert got == pytest.approx(-0.3)

    def test_agrees_with_bruteforce_recomputation(self):
        rng = np.random.default_rng(3)
        losses = rng.integers(0, 2, size=17)
        preds = rng.integers(0, 2, size=23)
        truth = rng.integers(0, 2, size=23)
        model = _ConstModel(preds)
        got = narrative_bias_formal(losses, model, np.zeros((23, 1)), truth)
        expected = losses.mean() - np.mean(preds != truth)
        assert got == pytest.approx(expected)


class TestSeries:
    def _series(self, n=6, **kw):
        rng = np.random.default_rng(0)
        return build_series(
            rng.integers(0, 2, n),
            rng.integers(0, 2, n),
            rng.uniform(0.3, 0.9, n),
            rng.uniform(0.1, 0.5, n),
            **kw,
        )

    def test_lengths_and_ranges(self):
        s = self._series(9)
        assert list(s.iterations) == list(range(1, 10))
        assert ((s.query_macro_f1 >= 0) & (s.query_macro_f1 <= 1)).all()
        assert ((s.nb_experimental >= -1) & (s.nb_experimental <= 1)).all()

    def test_misaligned_inputs_rejected(self):
        with pytest.raises(ValueError):
            build_series([1, 0], [1], [0.5, 0.5], [0.2, 0.2])

    def test_aggregate_permutation_invariant(self):
        runs = [self._series(7), self._series(7), self._series(7)]
        a = aggregate_cell(runs)
        b = aggregate_cell(list(reversed(runs)))
        assert a == b

    def test_single_run_aggregate_equals_own_means(self):
        s = self._series(5)
        cell = aggregate_cell([s])
        assert cell["mean_f1"] == pytest.approx(s.mean_f1)
        assert cell["mean_nb"] == pytest.approx(s.mean_nb)
        assert cell["std_f1"] == 0.0
