import numpy as np
import pytest

from xgl import learners
from xgl.learners import ModelSpec, fit, model_from_json, model_to_json

SPECS = [
    ModelSpec("rbf_svm", {"gamma": 1.0, "C": 5.0}),
    ModelSpec("gradient_boosted_trees", {"rounds": 20}),
    ModelSpec("decision_tree", {"max_depth": 4}),
]


def _task(seed, n=60):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


class TestModelSpec:
    def test_defaults_filled(self):
        spec = ModelSpec("gradient_boosted_trees")
        assert spec.hyperparameters == {"rounds": 100, "depth": 3, "learning_rate": 0.1}

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ModelSpec("perceptron")

    def test_invalid_hyperparameters(self):
        with pytest.raises(ValueError):
            ModelSpec("rbf_svm", {"gamma": -1.0})
        with pytest.raises(ValueError):
            ModelSpec("gradient_boosted_trees", {"rounds": 0})
        with pytest.raises(ValueError):
            ModelSpec("decision_tree", {"max_depth": 0})
        with pytest.raises(ValueError):
            ModelSpec("rbf_svm", {"bogus": 3})

    def test_roundtrip_dict(self):
        spec = ModelSpec("rbf_svm", {"gamma": 2.0, "C": 3.0})
        assert ModelSpec.from_dict(spec.to_dict()) == spec


class TestFit:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_separable_pair_training_accuracy(self, spec):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1])
        model = fit(spec, X, y, seed=0)
        assert (model.predict(X) == y).all()

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_predict_is_argmax_of_proba(self, spec):
        X, y = _task(0, n=100)
        model = fit(spec, X, y, seed=1)
        rng = np.random.default_rng(2)
        probe = rng.normal(size=(100, 3))
        proba = model.predict_proba(probe)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        assert np.array_equal(model.predict(probe), np.argmax(proba, axis=1))

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_bitwise_reproducible(self, spec):
        X, y = _task(1)
        a = fit(spec, X, y, seed=42)
        b = fit(spec, X, y, seed=42)
        probe = np.random.default_rng(3).normal(size=(50, 3))
        assert np.array_equal(a.decision_function(probe), b.decision_function(probe))
        assert a.fingerprint == b.fingerprint

    def test_single_class_rejected(self):
        X, _ = _task(2)
        with pytest.raises(ValueError):
            fit(SPECS[0], X, np.zeros(len(X), dtype=int), seed=0)

    def test_nonpositive_weights_rejected(self):
        X, y = _task(3)
        with pytest.raises(ValueError):
            fit(SPECS[2], X, y, weights=np.zeros(len(y)), seed=0)

    def test_fingerprint_tracks_data_and_seed(self):
        X, y = _task(4)
        a = fit(SPECS[2], X, y, seed=0)
        b = fit(SPECS[2], X, y, seed=1)
        c = fit(SPECS[2], X + 1.0, y, seed=0)
        assert a.fingerprint != b.fingerprint
        assert a.fingerprint[0] != c.fingerprint[0]

    def test_module_level_ops_delegate(self):
        X, y = _task(5)
        model = fit(SPECS[2], X, y, seed=0)
        assert np.array_equal(learners.predict(model, X), model.predict(X))
        assert np.array_equal(learners.predict_proba(model, X), model.predict_proba(X))


class TestSerialization:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_json_roundtrip_preserves_predictions(self, spec):
        X, y = _task(6, n=80)
        model = fit(spec, X, y, weights=np.random.default_rng(0).uniform(1, 3, len(y)), seed=9)
        clone = model_from_json(model_to_json(model))
        probe = np.random.default_rng(7).normal(size=(60, 3))
        assert np.array_equal(model.predict(probe), clone.predict(probe))
        assert np.allclose(model.predict_proba(probe), clone.predict_proba(probe))
        assert clone.spec == model.spec

    def test_version_checked(self):
        X, y = _task(7)
        blob = model_to_json(fit(SPECS[2], X, y, seed=0))
        import json

        payload = json.loads(blob)
        payload["v"] = 99
        with pytest.raises(ValueError):
            model_from_json(json.dumps(payload))
