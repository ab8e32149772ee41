"""Model specifications and the trained-model wrapper used by the protocols.

Every classifier exposes labels, signed margins, and class probabilities so
the query strategies can rank the pool. Fits are pure functions of
(data, spec, seed).
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .boosting import GradientBoostingClassifier
from .svm import SMOClassifier
from .tree import DecisionTreeClassifier
from .validation import check_binary_labels, check_matrix, check_weights

KINDS = ("rbf_svm", "gradient_boosted_trees", "decision_tree")

_DEFAULTS = {
    "rbf_svm": {"gamma": 1.0, "C": 1.0},
    "gradient_boosted_trees": {"rounds": 100, "depth": 3, "learning_rate": 0.1},
    "decision_tree": {"max_depth": 6, "min_leaf": 1},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        merged = dict(_DEFAULTS[self.kind])
        unknown = set(self.hyperparameters) - set(merged)
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        merged.update(self.hyperparameters)
        object.__setattr__(self, "hyperparameters", merged)
        h = merged
        if self.kind == "rbf_svm" and (h["gamma"] <= 0 or h["C"] <= 0):
            raise ValueError("rbf_svm requires gamma > 0 and C > 0")
        if self.kind == "gradient_boosted_trees" and (h["rounds"] < 1 or h["depth"] < 1):
            raise ValueError("gradient_boosted_trees requires rounds >= 1 and depth >= 1")
        if self.kind == "decision_tree" and (h["max_depth"] < 1 or h["min_leaf"] < 1):
            raise ValueError("decision_tree requires max_depth >= 1 and min_leaf >= 1")

    def to_dict(self):
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters)}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], hyperparameters=dict(d.get("hyperparameters", {})))


def _build_estimator(spec, seed):
    h = spec.hyperparameters
    if spec.kind == "rbf_svm":
        return SMOClassifier(C=h["C"], gamma=h["gamma"], random_state=seed)
    if spec.kind == "gradient_boosted_trees":
        return GradientBoostingClassifier(
            n_rounds=h["rounds"], max_depth=h["depth"], learning_rate=h["learning_rate"]
        )
    return DecisionTreeClassifier(max_depth=h["max_depth"], min_leaf=h["min_leaf"])


def data_fingerprint(X, y, w):
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(X, dtype=np.float64).tobytes())
    digest.update(np.ascontiguousarray(y, dtype=np.int64).tobytes())
    digest.update(np.ascontiguousarray(w, dtype=np.float64).tobytes())
    return digest.hexdigest()[:16]


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: object
    fingerprint: tuple
    warning: str = ""

    def predict(self, X):
        return self.estimator.predict(X)

    def predict_proba(self, X):
        return self.estimator.predict_proba(X)

    def decision_function(self, X):
        return self.estimator.decision_function(X)


def fit(spec, features, labels, weights=None, seed=0):
    """Train a classifier of the requested kind; deterministic given seed."""
    X = check_matrix(features)
    y = check_binary_labels(labels, X.shape[0])
    if y.min() == y.max():
        raise ValueError("training data contains a single class")
    w = check_weights(weights, X.shape[0])
    est = _build_estimator(spec, seed).fit(X, y, sample_weight=w)
    warning = ""
    if spec.kind == "rbf_svm" and not est.converged_:
        warning = "smo pass cap reached; returning best iterate"
    return TrainedModel(
        spec=spec,
        estimator=est,
        fingerprint=(data_fingerprint(X, y, w), int(seed)),
        warning=warning,
    )


def predict(model, features):
    return model.predict(features)


def predict_proba(model, features):
    return model.predict_proba(features)


# ---------------------------------------------------------------------------
# JSON serialization (versioned, used by the session service snapshots)

_FORMAT_VERSION = 1


def _tree_to_obj(tree):
    t = tree.tree_
    return {
        "params": tree.get_params(),
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
        "n_samples": t.n_samples.tolist(),
        "n_features": tree.n_features_,
    }


def _tree_from_obj(obj, cls):
    from .tree import Tree

    est = cls(**obj["params"])
    t = Tree()
    t.feature = obj["feature"]
    t.threshold = obj["threshold"]
    t.left = obj["left"]
    t.right = obj["right"]
    t.value = obj["value"]
    t.n_samples = obj["n_samples"]
    est.tree_ = t.freeze()
    est.n_features_ = obj["n_features"]
    est.feature_importances_ = None
    return est


def model_to_json(model):
    spec = model.spec
    payload = {
        "v": _FORMAT_VERSION,
        "spec": spec.to_dict(),
        "fingerprint": list(model.fingerprint),
        "warning": model.warning,
    }
    est = model.estimator
    if spec.kind == "rbf_svm":
        payload["estimator"] = {
            "gamma": est.gamma,
            "C": est.C,
            "intercept": est.intercept_,
            "support_vectors": est.support_vectors_.tolist(),
            "dual_coef": est.dual_coef_.tolist(),
            "n_features": est.n_features_,
            "converged": bool(est.converged_),
        }
    elif spec.kind == "gradient_boosted_trees":
        payload["estimator"] = {
            "base_score": est.base_score_,
            "learning_rate": est.learning_rate,
            "n_features": est.n_features_,
            "trees": [_tree_to_obj(t) for t in est.trees_],
        }
    else:
        payload["estimator"] = _tree_to_obj(est)
    return json.dumps(payload)


def model_from_json(blob):
    from .tree import DecisionTreeRegressor

    payload = json.loads(blob)
    if payload.get("v") != _FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {payload.get('v')!r}")
    spec = ModelSpec.from_dict(payload["spec"])
    obj = payload["estimator"]
    if spec.kind == "rbf_svm":
        est = SMOClassifier(C=obj["C"], gamma=obj["gamma"])
        est.support_vectors_ = np.asarray(obj["support_vectors"], dtype=np.float64)
        if est.support_vectors_.size == 0:
            est.support_vectors_ = est.support_vectors_.reshape(0, obj["n_features"])
        est.dual_coef_ = np.asarray(obj["dual_coef"], dtype=np.float64)
        est.intercept_ = obj["intercept"]
        est.n_features_ = obj["n_features"]
        est.converged_ = obj["converged"]
    elif spec.kind == "gradient_boosted_trees":
        h = spec.hyperparameters
        est = GradientBoostingClassifier(
            n_rounds=h["rounds"], max_depth=h["depth"], learning_rate=obj["learning_rate"]
        )
        est.base_score_ = obj["base_score"]
        est.trees_ = [_tree_from_obj(t, DecisionTreeRegressor) for t in obj["trees"]]
        est.n_features_ = obj["n_features"]
    else:
        est = _tree_from_obj(obj, DecisionTreeClassifier)
    fingerprint = tuple(payload["fingerprint"])
    return TrainedModel(spec=spec, estimator=est, fingerprint=fingerprint, warning=payload["warning"])
