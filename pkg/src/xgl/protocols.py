"""Interaction strategies: one query per iteration over an unlabeled pool.

Selectors are pure functions of (state, seed). Machine-initiated strategies
(random, uncertainty, representative) rank the pool themselves; the
human-initiated ones (guided, explanation-guided) go through the simulated
supervisor, which owns the ground-truth oracle and the attention parameter.
"""

from dataclasses import dataclass, field

import numpy as np

from . import learners
from .dataset import Dataset, FoldSplit
from .explain import SurrogateParams, distill, score_rules
from .metrics import macro_f1
from .validation import child_seed

STRATEGIES = ("random", "al_unc", "al_repr", "gl", "xgl")


@dataclass
class QueryRecord:
    iteration: int
    index: int
    predicted: int
    true: int
    rule_id: int = -1


@dataclass
class SupervisorSim:
    """Simulated annotator: softmax attention over per-rule quality.

    theta >= 0 sharpens the preference for bad rules; m_i = 1 - rule F1.
    The oracle holds true labels for the whole training pool.
    """

    theta: float
    truth_oracle: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.theta) or self.theta < 0:
            raise ValueError("theta must be finite and >= 0")
        self.truth_oracle = np.asarray(self.truth_oracle).astype(np.int64)


@dataclass
class LoopState:
    features: np.ndarray
    pool: np.ndarray  # train-pool global indices
    labeled: dict  # global index -> label revealed so far
    unlabeled: np.ndarray  # sorted global indices
    iteration: int = 0
    model: object = None
    ruleset: object = None
    query_log: list = field(default_factory=list)
    history: list = field(default_factory=list)
    exhausted: bool = False

    def validate(self):
        overlap = set(self.labeled) & set(self.unlabeled.tolist())
        if overlap:
            raise ValueError(f"labeled and unlabeled overlap: {sorted(overlap)[:5]}")
        if len(self.query_log) != self.iteration:
            raise ValueError("query_log length must equal iteration")

    def mark_labeled(self, idx, label):
        idx = int(idx)
        if idx in self.labeled:
            raise ValueError(f"instance {idx} is already labeled")
        self.labeled[idx] = int(label)
        self.unlabeled = self.unlabeled[self.unlabeled != idx]


def _require_pool(state):
    if state.unlabeled.size == 0:
        raise ValueError("unlabeled pool is empty")


def select_random(state, seed):
    """Uniform draw from the unlabeled pool."""
    _require_pool(state)
    rng = np.random.default_rng(seed)
    return int(rng.choice(state.unlabeled))


def select_uncertain(state, seed):
    """Smallest class-probability gap |p1 - p0|; ties to the lowest index."""
    _require_pool(state)
    proba = state.model.predict_proba(state.features[state.unlabeled])
    gap = np.abs(proba[:, 1] - proba[:, 0])
    return int(state.unlabeled[np.argmin(gap)])


def mean_cosine_similarity(X):
    """Per-row mean cosine similarity to the whole set (self included).

    Zero-norm rows contribute (and receive) similarity 0.
    """
    norms = np.linalg.norm(X, axis=1)
    unit = np.divide(X, norms[:, None], out=np.zeros_like(X), where=norms[:, None] > 0)
    center = unit.mean(axis=0)
    return unit @ center


def select_representative(state, seed, beta=1.0):
    """Least-confidence score times mean pool similarity to the power beta."""
    _require_pool(state)
    Xu = state.features[state.unlabeled]
    proba = state.model.predict_proba(Xu)
    informativeness = 1.0 - proba.max(axis=1)
    density = mean_cosine_similarity(Xu)
    score = informativeness * np.sign(density) * np.abs(density) ** beta
    return int(state.unlabeled[np.argmax(score)])


def select_guided(state, sim, seed):
    """Class-balanced human picks: alternate the target true class starting
    from the globally rarer one; uniform within the class, uniform fallback."""
    _require_pool(state)
    rng = np.random.default_rng(seed)
    truth = sim.truth_oracle
    pool_counts = np.bincount(truth[state.pool], minlength=2)
    rare = int(np.argmin(pool_counts)) if pool_counts[0] != pool_counts[1] else 1
    target = rare if state.iteration % 2 == 0 else 1 - rare
    candidates = state.unlabeled[truth[state.unlabeled] == target]
    if candidates.size == 0:
        return int(rng.choice(state.unlabeled))
    return int(rng.choice(candidates))


def rule_choice_probabilities(m_values, theta):
    """Softmax exp(theta * m_i) over eligible rules, numerically stable."""
    m = np.asarray(m_values, dtype=np.float64)
    z = theta * m
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def xgl_candidates(state):
    """Eligible rules paired with their still-unlabeled covered instances."""
    if state.ruleset is None:
        raise ValueError("xgl requires a scored ruleset on the state")
    unlabeled = set(state.unlabeled.tolist())
    candidates = []
    for rule in state.ruleset.rules:
        if not rule.eligible:
            continue
        covered_global = state.pool[rule.coverage]
        covered_unl = np.array([g for g in covered_global if g in unlabeled], dtype=np.intp)
        if covered_unl.size == 0:
            continue
        candidates.append((rule, covered_unl))
    return candidates


def select_xgl(state, sim, seed, trace=None):
    """Supervisor picks a rule by softmax over m_i = 1 - rule F1, then a
    random covered mistake; mistake-free rules trigger a redraw, and if no
    rule covers any mistake a uniform random instance is returned.

    Returns (index, rule_id); rule_id is -1 for the uniform fallback. When
    ``trace`` is a dict it receives the id of the first rule the softmax
    drew (the supervisor's attention before any redraw).
    """
    _require_pool(state)
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=[int(seed), int(sim.seed)])
    )
    truth = sim.truth_oracle
    candidates = xgl_candidates(state)

    remaining = list(range(len(candidates)))
    first_draw = True
    while remaining:
        m = np.array([1.0 - candidates[i][0].f1 for i in remaining])
        probs = rule_choice_probabilities(m, sim.theta)
        pick = remaining[rng.choice(len(remaining), p=probs)]
        rule, covered_unl = candidates[pick]
        if first_draw and trace is not None:
            trace["first_rule_id"] = rule.id
        first_draw = False
        mistakes = covered_unl[truth[covered_unl] != rule.label]
        if mistakes.size:
            return int(rng.choice(mistakes)), rule.id
        remaining.remove(pick)  # mistake-free: redraw among the others

    return int(rng.choice(state.unlabeled)), -1


# ---------------------------------------------------------------------------
# The interaction loop

def _fit_seed(seed, t):
    return child_seed(seed, 0, t)


def _select_seed(seed, t):
    return child_seed(seed, 1, t)


def run_loop(
    dataset,
    fold,
    strategy,
    spec,
    budget,
    sim=None,
    seed=0,
    surrogate=None,
    window=5,
    keep_models=False,
    rule_score_mode="coverage",
    score_on_unlabeled_only=False,
):
    """Run one interactive session: refit, (for xgl) re-explain, query, label.

    Per iteration the model is fit on the labels revealed so far, its test
    F1 is recorded, the selector picks one unlabeled instance, the model's
    prediction for it is logged before the true label is revealed, and the
    instance moves to the labeled set. Returns (final_model, state).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy in ("gl", "xgl") and sim is None:
        raise ValueError(f"{strategy} requires a SupervisorSim")

    state = init_state(dataset, fold)
    X_test = dataset.features[fold.test_indices]
    y_test = dataset.labels[fold.test_indices]
    surrogate = surrogate or SurrogateParams()

    for t in range(budget):
        if state.unlabeled.size == 0:
            state.exhausted = True
            break
        step_loop(
            state,
            dataset,
            strategy,
            spec,
            sim=sim,
            seed=seed,
            surrogate=surrogate,
            X_test=X_test,
            y_test=y_test,
            keep_models=keep_models,
            rule_score_mode=rule_score_mode,
            score_on_unlabeled_only=score_on_unlabeled_only,
        )

    final_model = _fit_on_labeled(dataset, state, spec, _fit_seed(seed, state.iteration))
    state.model = final_model
    state.validate()
    return final_model, state


def init_state(dataset, fold):
    labeled = {int(i): int(dataset.labels[i]) for i in fold.initial_labeled}
    unlabeled = np.setdiff1d(fold.train_indices, fold.initial_labeled)
    return LoopState(
        features=dataset.features,
        pool=np.asarray(fold.train_indices, dtype=np.intp),
        labeled=labeled,
        unlabeled=unlabeled,
    )


def _fit_on_labeled(dataset, state, spec, fit_seed):
    idx = np.array(sorted(state.labeled), dtype=np.intp)
    y = np.array([state.labeled[i] for i in idx], dtype=np.int64)
    return learners.fit(spec, dataset.features[idx], y, dataset.weights[idx], seed=fit_seed)


def step_loop(
    state,
    dataset,
    strategy,
    spec,
    sim,
    seed,
    surrogate,
    X_test,
    y_test,
    keep_models=False,
    rule_score_mode="coverage",
    score_on_unlabeled_only=False,
):
    t = state.iteration
    model = _fit_on_labeled(dataset, state, spec, _fit_seed(seed, t))
    state.model = model

    record = {}
    if len(X_test):
        pred_test = model.predict(X_test)
        record["test_f1"] = macro_f1(pred_test, y_test)
        record["test_err"] = float(np.mean(pred_test != y_test))
    else:
        record["test_f1"] = float("nan")
        record["test_err"] = float("nan")

    rule_id = -1
    if strategy == "xgl":
        ruleset = distill(model, dataset.features[state.pool], surrogate, seed=seed)
        truth = sim.truth_oracle[state.pool]
        if score_on_unlabeled_only:
            ruleset = _score_on_unlabeled(ruleset, truth, state, rule_score_mode)
        else:
            ruleset = score_rules(ruleset, truth, mode=rule_score_mode)
        state.ruleset = ruleset
        record["fidelity"] = ruleset.fidelity
        record["n_rules"] = len(ruleset)
    else:
        record["fidelity"] = float("nan")
        record["n_rules"] = -1

    sel_seed = _select_seed(seed, t)
    if strategy == "random":
        idx = select_random(state, sel_seed)
    elif strategy == "al_unc":
        idx = select_uncertain(state, sel_seed)
    elif strategy == "al_repr":
        idx = select_representative(state, sel_seed)
    elif strategy == "gl":
        idx = select_guided(state, sim, sel_seed)
    else:
        candidate_f1 = {r.id: r.f1 for r, _ in xgl_candidates(state)}
        trace = {}
        idx, rule_id = select_xgl(state, sim, sel_seed, trace=trace)
        if candidate_f1 and "first_rule_id" in trace:
            worst = min(candidate_f1.values())
            record["picked_worst"] = bool(
                candidate_f1.get(trace["first_rule_id"], 1.0) <= worst + 1e-12
            )

    predicted = int(model.predict(dataset.features[[idx]])[0])
    true = int(dataset.labels[idx])
    state.query_log.append(
        QueryRecord(iteration=t + 1, index=idx, predicted=predicted, true=true, rule_id=rule_id)
    )
    if keep_models:
        record["model"] = model
    state.history.append(record)
    state.mark_labeled(idx, true)
    state.iteration += 1


def _score_on_unlabeled(ruleset, truth, state, mode):
    """Score rules only over still-unlabeled pool rows (optional variant)."""
    pool_list = state.pool.tolist()
    pos_of = {g: i for i, g in enumerate(pool_list)}
    unl_positions = np.array([pos_of[g] for g in state.unlabeled.tolist()], dtype=np.intp)
    keep = np.zeros(len(pool_list), dtype=bool)
    keep[unl_positions] = True

    from dataclasses import replace

    trimmed = replace(
        ruleset,
        rules=tuple(
            replace(r, coverage=r.coverage[keep[r.coverage]]) for r in ruleset.rules
        ),
    )
    scored = score_rules(trimmed, truth, mode=mode)
    # restore full coverage so selection still sees every covered instance
    return replace(
        scored,
        rules=tuple(
            replace(sr, coverage=orig.coverage)
            for sr, orig in zip(scored.rules, ruleset.rules)
        ),
    )


def query_log_rows(state, strategy):
    """Per-iteration export rows for the query log CSV."""
    return [
        {
            "iteration": q.iteration,
            "instance_id": q.index,
            "strategy": strategy,
            "predicted_label": q.predicted,
            "true_label": q.true,
            "rule_id": q.rule_id,
        }
        for q in state.query_log
    ]
