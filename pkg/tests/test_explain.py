import json

import numpy as np
import pytest

from xgl.explain import (
    SurrogateParams,
    distill,
    predict_with_rules,
    ruleset_to_json,
    score_rules,
)
from xgl.learners import ModelSpec, fit


def _model_and_pool(seed, n=300, d=3, kind="gradient_boosted_trees"):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = ((X[:, 0] - 0.7 * X[:, 1]) > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    spec = ModelSpec(kind, {"rounds": 15} if kind == "gradient_boosted_trees" else {})
    model = fit(spec, X, y, seed=seed)
    pool = rng.normal(size=(n, d))
    return model, pool


class TestDistill:
    def test_tree_model_distills_itself_exactly(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 3))
        y = (X[:, 0] > 0.2).astype(int)
        model = fit(ModelSpec("decision_tree", {"max_depth": 3}), X, y, seed=0)
        rs = distill(model, X, SurrogateParams(max_depth=6, min_leaf=1, max_leaves=None))
        assert rs.fidelity == 1.0

    def test_fidelity_non_decreasing_in_depth(self):
        # refinement property over 20 random model/pool pairs: agreement
        # (accuracy) is exactly monotone because a deeper greedy tree refines
        # the shallower one; macro-F1 fidelity can dip by a hair when a split
        # trades precision between classes, so it gets a small slack
        for seed in range(20):
            model, pool = _model_and_pool(seed, n=150)
            yhat = model.predict(pool)
            prev_acc, prev_fid = 0.0, 0.0
            for depth in (1, 2, 3, 5):
                rs = distill(model, pool, SurrogateParams(max_depth=depth, min_leaf=2, max_leaves=None))
                acc = float(np.mean(predict_with_rules(rs, pool) == yhat))
                assert acc >= prev_acc - 1e-12
                assert rs.fidelity >= prev_fid - 1e-3
                prev_acc, prev_fid = acc, rs.fidelity

    def test_rules_partition_pool_and_random_points(self):
        model, pool = _model_and_pool(1)
        rs = distill(model, pool, SurrogateParams())
        probe = np.random.default_rng(2).normal(scale=3.0, size=(1000, pool.shape[1]))
        for X in (pool, probe):
            hits = np.zeros(len(X))
            for rule in rs.rules:
                hits += rule.mask(X)
            assert (hits == 1).all()

    def test_rule_predictions_match_surrogate_tree(self):
        model, pool = _model_and_pool(3)
        rs = distill(model, pool, SurrogateParams())
        # distill already cross-checks; verify coverage recomputation here
        for rule in rs.rules:
            mask = rule.mask(pool)
            assert np.array_equal(np.nonzero(mask)[0], rule.coverage)

    def test_single_rule_for_constant_model(self):
        class Const:
            def predict(self, X):
                return np.ones(len(X), dtype=int)

        pool = np.random.default_rng(4).normal(size=(50, 2))
        rs = distill(Const(), pool, SurrogateParams())
        assert len(rs.rules) == 1
        assert rs.rules[0].predicates == ()
        assert (predict_with_rules(rs, pool) == 1).all()

    def test_max_leaves_caps_rule_count(self):
        model, pool = _model_and_pool(5, n=500)
        rs = distill(model, pool, SurrogateParams(max_depth=12, min_leaf=1, max_leaves=8))
        assert len(rs.rules) <= 8

    def test_pool_smaller_than_min_leaf_rejected(self):
        model, pool = _model_and_pool(6)
        with pytest.raises(ValueError):
            distill(model, pool[:2], SurrogateParams(min_leaf=5))


class TestPredictWithRules:
    def test_agrees_with_tree_on_new_rows(self):
        model, pool = _model_and_pool(7)
        rs = distill(model, pool, SurrogateParams())
        probe = np.random.default_rng(8).normal(size=(200, pool.shape[1]))
        got = predict_with_rules(rs, probe)
        assert set(np.unique(got).tolist()) <= {0, 1}

    def test_single_rule_constant(self):
        class Const:
            def predict(self, X):
                return np.zeros(len(X), dtype=int)

        pool = np.random.default_rng(9).normal(size=(30, 2))
        rs = distill(Const(), pool, SurrogateParams())
        assert (predict_with_rules(rs, pool * 100) == 0).all()


class TestScoreRules:
    def _scored(self, truth_fn):
        model, pool = _model_and_pool(10)
        rs = distill(model, pool, SurrogateParams())
        truth = truth_fn(rs, pool)
        return score_rules(rs, truth), rs

    def test_all_correct_rule(self):
        model, pool = _model_and_pool(11)
        rs = distill(model, pool, SurrogateParams())
        truth = predict_with_rules(rs, pool)  # truth equals the rule labels
        scored = score_rules(rs, truth)
        for rule in scored.rules:
            if rule.coverage.size:
                assert rule.precision == 1.0
                assert rule.f1 == 1.0
                assert rule.mistakes == 0

    def test_all_wrong_rule(self):
        model, pool = _model_and_pool(12)
        rs = distill(model, pool, SurrogateParams())
        truth = 1 - predict_with_rules(rs, pool)
        scored = score_rules(rs, truth)
        for rule in scored.rules:
            if rule.coverage.size:
                assert rule.precision == 0.0
                assert rule.f1 == 0.0
                assert rule.mistakes == rule.coverage.size

    def test_half_precision_hand_values(self):
        # p = 0.5, coverage 10 -> F1 = 2/3, mistakes = 5
        from dataclasses import replace

        model, pool = _model_and_pool(13)
        rs = distill(model, pool, SurrogateParams())
        rule = max(rs.rules, key=lambda r: r.coverage.size)
        cov = rule.coverage[:10]
        rs_small = type(rs)(
            rules=(replace(rule, coverage=cov, id=0),),
            fidelity=1.0,
            n_pool=rs.n_pool,
        )
        truth = np.full(len(pool), 1 - rule.label)
        truth[cov[:5]] = rule.label
        scored = score_rules(rs_small, truth)
        assert scored.rules[0].precision == pytest.approx(0.5)
        assert scored.rules[0].f1 == pytest.approx(2 / 3)
        assert scored.rules[0].mistakes == 5

    def test_empty_coverage_marked_ineligible(self):
        from dataclasses import replace

        model, pool = _model_and_pool(14)
        rs = distill(model, pool, SurrogateParams())
        empty = replace(rs.rules[0], coverage=np.array([], dtype=int))
        rs2 = type(rs)(rules=(empty,) + rs.rules[1:], fidelity=rs.fidelity, n_pool=rs.n_pool)
        scored = score_rules(rs2, np.zeros(len(pool), dtype=int))
        assert scored.rules[0].eligible is False

    def test_order_oblivious(self):
        model, pool = _model_and_pool(15)
        rs = distill(model, pool, SurrogateParams())
        truth = np.random.default_rng(16).integers(0, 2, len(pool))
        fwd = score_rules(rs, truth)
        rev = score_rules(type(rs)(rules=tuple(reversed(rs.rules)), fidelity=rs.fidelity, n_pool=rs.n_pool), truth)
        by_id_fwd = {r.id: (r.precision, r.f1, r.mistakes) for r in fwd.rules}
        by_id_rev = {r.id: (r.precision, r.f1, r.mistakes) for r in rev.rules}
        assert by_id_fwd == by_id_rev

    def test_global_mode(self):
        model, pool = _model_and_pool(17)
        rs = distill(model, pool, SurrogateParams())
        truth = np.random.default_rng(18).integers(0, 2, len(pool))
        scored = score_rules(rs, truth, mode="global")
        for rule in scored.rules:
            if not rule.coverage.size:
                continue
            pred = np.full(len(pool), 1 - rule.label)
            pred[rule.coverage] = rule.label
            tp = np.sum((pred == rule.label) & (truth == rule.label) & np.isin(np.arange(len(pool)), rule.coverage))
            fp = rule.mistakes
            fn = np.sum(truth == rule.label) - tp
            expected = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
            assert rule.f1 == pytest.approx(expected)

    def test_length_mismatch(self):
        model, pool = _model_and_pool(19)
        rs = distill(model, pool, SurrogateParams())
        with pytest.raises(ValueError):
            score_rules(rs, np.zeros(len(pool) - 1, dtype=int))


class TestSerialization:
    def test_json_shape(self):
        model, pool = _model_and_pool(20)
        rs = score_rules(distill(model, pool, SurrogateParams()), predict_with_rules(distill(model, pool, SurrogateParams()), pool))
        obj = json.loads(ruleset_to_json(rs, feature_names=[f"f{i}" for i in range(pool.shape[1])]))
        assert obj["v"] == 1
        assert {"id", "predicates", "label", "coverage_size", "precision", "f1", "text"} <= set(obj["rules"][0])
        for rule in obj["rules"]:
            for pred in rule["predicates"]:
                assert pred["op"] in ("<=", ">")
