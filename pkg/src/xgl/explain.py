"""Global explanations: distill a classifier into a surrogate tree and read
its leaves off as mutually exclusive, exhaustive conjunctive rules."""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import macro_f1
from .tree import DecisionTreeClassifier
from .validation import check_matrix


@dataclass(frozen=True)
class Predicate:
    feature: int
    op: str  # "<=" or ">"
    threshold: float

    def __post_init__(self):
        if self.op not in ("<=", ">"):
            raise ValueError(f"bad predicate op {self.op!r}")

    def holds(self, X):
        col = X[:, self.feature]
        return col <= self.threshold if self.op == "<=" else col > self.threshold

    def describe(self, feature_names=None):
        name = feature_names[self.feature] if feature_names else f"x{self.feature}"
        return f"{name} {self.op} {self.threshold:.6g}"


@dataclass(frozen=True)
class Rule:
    id: int
    predicates: tuple
    label: int
    coverage: np.ndarray  # positions into the distillation pool
    precision: float = float("nan")
    f1: float = float("nan")
    mistakes: int = -1
    eligible: bool = True

    def __post_init__(self):
        cov = np.asarray(self.coverage, dtype=np.intp)
        cov.setflags(write=False)
        object.__setattr__(self, "coverage", cov)
        object.__setattr__(self, "predicates", tuple(self.predicates))

    def mask(self, X):
        out = np.ones(X.shape[0], dtype=bool)
        for p in self.predicates:
            out &= p.holds(X)
        return out


@dataclass(frozen=True)
class RuleSet:
    rules: tuple
    fidelity: float
    source_fingerprint: tuple = ()
    n_pool: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __len__(self):
        return len(self.rules)


@dataclass(frozen=True)
class SurrogateParams:
    """Structural complexity caps of the surrogate tree.

    Complexity is controlled by hard caps rather than a penalty weight:
    max_depth bounds path length, min_leaf the leaf support, and max_leaves
    (best-first growth) the rule count directly.
    """

    max_depth: int = 10
    min_leaf: int | None = None  # None: max(3, pool_size // 300)
    max_leaves: int | None = 30

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_leaf is not None and self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")

    def resolve_min_leaf(self, pool_size):
        if self.min_leaf is not None:
            return self.min_leaf
        return max(3, pool_size // 300)


def distill(model, pool, params=None, seed=0):
    """Fit a surrogate tree to the model's pool predictions and extract rules.

    Fidelity is the macro-F1 agreement between rule predictions and model
    predictions over the pool.
    """
    params = params or SurrogateParams()
    X = check_matrix(pool, "pool")
    min_leaf = params.resolve_min_leaf(X.shape[0])
    if X.shape[0] < min_leaf:
        raise ValueError("pool smaller than min_leaf")
    yhat = np.asarray(model.predict(X)).astype(np.int64)

    tree = _fit_surrogate_tree(X, yhat, params, min_leaf)
    t = tree.tree_
    leaf_of_row = tree.apply(X)
    paths = t.decision_paths()

    rules = []
    for rid, node in enumerate(sorted(paths)):
        preds = tuple(Predicate(f, op, thr) for f, op, thr in paths[node])
        label = int(t.value[node] > 0.5)
        coverage = np.nonzero(leaf_of_row == node)[0]
        rules.append(Rule(id=rid, predicates=preds, label=label, coverage=coverage))

    ruleset = RuleSet(
        rules=tuple(rules),
        fidelity=float(macro_f1(tree.predict(X), yhat)),
        source_fingerprint=(getattr(model, "fingerprint", ()), X.shape),
        n_pool=X.shape[0],
    )
    _check_partition(ruleset, X, tree)
    return ruleset


def _fit_surrogate_tree(X, yhat, params, min_leaf):
    if yhat.min() == yhat.max():
        # constant model: the surrogate is a bare root leaf
        tree = DecisionTreeClassifier(max_depth=1, min_leaf=1)
        tree.n_features_ = X.shape[1]
        from .tree import Tree

        t = Tree()
        t.add_node(float(yhat[0]), X.shape[0])
        tree.tree_ = t.freeze()
        tree.feature_importances_ = np.zeros(X.shape[1])
        return tree
    return DecisionTreeClassifier(
        max_depth=params.max_depth, min_leaf=min_leaf, max_leaves=params.max_leaves
    ).fit(X, yhat)


def _check_partition(ruleset, X, tree):
    hits = np.zeros(X.shape[0], dtype=np.intp)
    for rule in ruleset.rules:
        hits += rule.mask(X)
    if not (hits == 1).all():
        raise AssertionError("rules do not partition the pool")
    rule_pred = predict_with_rules(ruleset, X)
    if not np.array_equal(rule_pred, tree.predict(X)):
        raise AssertionError("rule predictions disagree with the surrogate tree")


def predict_with_rules(ruleset, features):
    """Label each row with its unique covering rule's label."""
    X = check_matrix(features)
    out = np.full(X.shape[0], -1, dtype=np.int64)
    assigned = np.zeros(X.shape[0], dtype=bool)
    for rule in ruleset.rules:
        m = rule.mask(X) & ~assigned
        out[m] = rule.label
        assigned |= m
    if not assigned.all():
        raise AssertionError("a row escaped every rule; the rule set is not exhaustive")
    return out


def score_rules(ruleset, pool_truth, mode="coverage"):
    """Attach ground-truth diagnostics to every rule.

    mode="coverage": within-coverage precision p, F1 = 2p/(p+1) (recall
    inside the covered region is 1 by construction), and the mistake count.
    mode="global": the rule scored as a one-vs-rest classifier for its label
    over the whole pool.
    Rules with empty coverage are marked ineligible.
    """
    truth = np.asarray(pool_truth).astype(np.int64)
    if ruleset.n_pool and len(truth) != ruleset.n_pool:
        raise ValueError("truth vector not aligned with the distillation pool")
    scored = []
    for rule in ruleset.rules:
        cov = rule.coverage
        if cov.size == 0:
            scored.append(replace(rule, precision=float("nan"), f1=float("nan"), mistakes=0, eligible=False))
            continue
        agree = truth[cov] == rule.label
        p = float(np.mean(agree))
        mistakes = int(np.sum(~agree))
        if mode == "coverage":
            f1 = 2.0 * p / (p + 1.0)
        elif mode == "global":
            tp = int(np.sum(agree))
            fn = int(np.sum(truth == rule.label)) - tp
            denom = 2 * tp + mistakes + fn
            f1 = 2.0 * tp / denom if denom else 0.0
        else:
            raise ValueError(f"unknown scoring mode {mode!r}")
        scored.append(replace(rule, precision=p, f1=f1, mistakes=mistakes, eligible=True))
    return replace(ruleset, rules=tuple(scored))


# ---------------------------------------------------------------------------
# JSON wire format (shared with the session service and UI)

RULESET_FORMAT_VERSION = 1


def ruleset_to_obj(ruleset, feature_names=None):
    return {
        "v": RULESET_FORMAT_VERSION,
        "fidelity": ruleset.fidelity,
        "n_pool": ruleset.n_pool,
        "rules": [
            {
                "id": r.id,
                "predicates": [
                    {"feature": p.feature, "op": p.op, "threshold": p.threshold}
                    for p in r.predicates
                ],
                "text": [p.describe(feature_names) for p in r.predicates],
                "label": r.label,
                "coverage_size": int(r.coverage.size),
                "precision": None if np.isnan(r.precision) else r.precision,
                "f1": None if np.isnan(r.f1) else r.f1,
            }
            for r in ruleset.rules
        ],
    }


def ruleset_to_json(ruleset, feature_names=None):
    return json.dumps(ruleset_to_obj(ruleset, feature_names))
