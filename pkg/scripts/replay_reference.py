#!/usr/bin/env python3
"""Emit a JSON reference for frontend end-to-end tests: a seeded library
run's fold, its query sequence, and the per-iteration test F1 values the
service must reproduce when the same choices are replayed through it."""

import argparse
import json
import sys

import numpy as np

from xgl.dataset import build_dataset, stratified_kfold
from xgl.explain import SurrogateParams
from xgl.learners import ModelSpec
from xgl.metrics import macro_f1
from xgl.protocols import SupervisorSim, run_loop


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--budget", type=int, default=10)
    parser.add_argument("--seed", type=int, default=21)
    parser.add_argument("--dataset", default="synthetic")
    args = parser.parse_args()

    d = build_dataset(args.dataset, seed=args.seed)
    fold = stratified_kfold(d, 5, seed=0)[0]
    spec = ModelSpec("rbf_svm", {"gamma": 100.0, "C": 100.0})
    sim = SupervisorSim(theta=100.0, truth_oracle=d.labels, seed=11)
    surrogate = SurrogateParams(max_depth=10, min_leaf=3, max_leaves=30)
    model, state = run_loop(
        d, fold, "xgl", spec, budget=args.budget, sim=sim, seed=args.seed, surrogate=surrogate
    )
    final_pred = model.predict(d.features[fold.test_indices])
    out = {
        "dataset": args.dataset,
        "seed": args.seed,
        "model": spec.to_dict(),
        "surrogate": {"max_depth": 10, "min_leaf": 3, "max_leaves": 30},
        "fold": {
            "train": fold.train_indices.tolist(),
            "test": fold.test_indices.tolist(),
            "initial": fold.initial_labeled.tolist(),
        },
        "queries": [
            {"id": int(q.index), "label": int(q.true), "rule_id": int(q.rule_id)}
            for q in state.query_log
        ],
        # service history entry t aligns with the library model fit after
        # accepting batch t; the last entry equals the final refit
        "expected_test_f1": [h["test_f1"] for h in state.history[1:]]
        + [macro_f1(final_pred, d.labels[fold.test_indices])],
    }
    json.dump(out, sys.stdout)


if __name__ == "__main__":
    main()
