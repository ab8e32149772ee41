"""Interactive teaching oracle over finite hypothesis classes.

The oracle maintains per-instance weights that double over the disagreement
region of the learner's current hypothesis; an instance is revealed to the
learner once its weight exceeds an exponentially distributed threshold.
Instrumentation verifies the doubling/weight/sample-size bounds empirically.
"""

import csv
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .validation import child_seed


@dataclass(frozen=True)
class FiniteClass:
    """A finite instance set with one 0/1 label vector per hypothesis."""

    instances: np.ndarray
    hypotheses: np.ndarray  # shape (n_hypotheses, n_instances)
    names: tuple = ()

    def __post_init__(self):
        inst = np.asarray(self.instances)
        hyp = np.asarray(self.hypotheses, dtype=np.int8)
        if hyp.ndim != 2 or hyp.shape[1] != inst.shape[0]:
            raise ValueError("hypotheses must be (n_hypotheses, n_instances)")
        if not np.isin(hyp, (0, 1)).all():
            raise ValueError("hypothesis labels must be 0/1")
        seen = {h.tobytes() for h in hyp}
        if len(seen) != hyp.shape[0]:
            raise ValueError("hypotheses must be pairwise distinct")
        inst.setflags(write=False)
        hyp.setflags(write=False)
        object.__setattr__(self, "instances", inst)
        object.__setattr__(self, "hypotheses", hyp)

    @property
    def n_instances(self):
        return self.instances.shape[0]

    @property
    def n_hypotheses(self):
        return self.hypotheses.shape[0]

    def disagreement(self, i, j):
        """Normalized 0-1 distance between two hypotheses."""
        return float(np.mean(self.hypotheses[i] != self.hypotheses[j]))


def threshold_class(n_instances):
    """All threshold functions x >= k over the 1-D grid 0..n-1 (n+1 of them)."""
    X = np.arange(n_instances)
    hyps = np.array([(X >= k).astype(np.int8) for k in range(n_instances + 1)])
    return FiniteClass(instances=X, hypotheses=hyps)


def depth2_threshold_trees(n_instances):
    """Distinct labelings of the 1-D grid realizable by depth-2 threshold
    trees: a root cut, one cut per side, free 0/1 leaf labels."""
    X = np.arange(n_instances)
    seen = {}
    for a in range(n_instances + 1):
        left = X < a
        for b in range(a + 1):  # cut inside the left region
            left_lab = X < b
            for c in range(a, n_instances + 1):  # cut inside the right region
                right_lab = X < c
                for bits in range(16):
                    leaves = ((bits >> 0) & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1)
                    lab = np.where(
                        left,
                        np.where(left_lab, leaves[0], leaves[1]),
                        np.where(right_lab, leaves[2], leaves[3]),
                    ).astype(np.int8)
                    seen.setdefault(lab.tobytes(), lab)
    hyps = np.array(list(seen.values()), dtype=np.int8)
    return FiniteClass(instances=X, hypotheses=hyps)


def minimal_teaching_set(fc, target):
    """Smallest instance subset whose target labels uniquely identify the
    target hypothesis, by exhaustive search in increasing size
    (lexicographic tie-break)."""
    if not 0 <= target < fc.n_hypotheses:
        raise ValueError("target out of range")
    hyp = fc.hypotheses
    others = [i for i in range(fc.n_hypotheses) if i != target]
    if not others:
        return ()
    diff = hyp[others] != hyp[target]  # (n_others, n_instances)
    if not diff.any(axis=1).all():
        raise ValueError("duplicate hypotheses make teaching impossible")
    n = fc.n_instances
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            if diff[:, subset].any(axis=1).all():
                return subset
    raise AssertionError("unreachable: full instance set always teaches")


def first_consistent_learner(fc):
    """Deterministic learner: lowest-index hypothesis consistent with S."""

    def learn(S):
        for g in range(fc.n_hypotheses):
            if all(fc.hypotheses[g, x] == y for x, y in S.items()):
                return g
        raise ValueError("no consistent hypothesis")

    return learn


def last_consistent_learner(fc):
    """Adversarial variant: highest-index consistent hypothesis."""

    def learn(S):
        for g in range(fc.n_hypotheses - 1, -1, -1):
            if all(fc.hypotheses[g, x] == y for x, y in S.items()):
                return g
        raise ValueError("no consistent hypothesis")

    return learn


@dataclass
class TeachingState:
    weights: np.ndarray
    thresholds: np.ndarray
    S: dict
    eta: int
    lam: float


@dataclass
class TeachingReport:
    iterations: int
    doublings: int
    sample_size: int
    succeeded: bool
    final_hypothesis: int
    per_instance_doublings: np.ndarray
    max_weight: float
    min_weight: float
    max_total_weight: float
    invalidation_missed: bool
    rho: float = float("nan")
    bound_ok: bool = True
    extras: dict = field(default_factory=dict)


def teaching_oracle_run(fc, g_star, learner=None, delta=0.1, eta=0, seed=0, max_rounds=None):
    """Run the doubling-weights teaching oracle until the learner's
    disagreement with the target is at most eta.

    Weights start at 1/|X| and double over the disagreement region until its
    mass reaches 1; instances whose weight crosses their exponential
    threshold are labeled with the target's label and shown to the learner.
    A run fails (rare, probability <= delta) when a full round changes
    nothing; the deterministic learner would loop forever, so the run stops.
    """
    if not 0 <= g_star < fc.n_hypotheses:
        raise ValueError("g_star out of range")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    learner = learner or first_consistent_learner(fc)
    n = fc.n_instances
    lam = float(np.log(fc.n_hypotheses / delta))
    rng = np.random.default_rng(seed)
    # inverse-CDF exponential sampling for reproducibility
    thresholds = -np.log1p(-rng.uniform(size=n)) / lam

    w = np.full(n, 1.0 / n)
    S = {}
    target = fc.hypotheses[g_star]
    per_instance = np.zeros(n, dtype=np.int64)
    doublings = 0
    max_total = float(w.sum())
    max_w, min_w = float(w.max()), float(w.min())
    invalidation_missed = False
    if max_rounds is None:
        max_rounds = 10 * n * int(np.ceil(np.log2(2 * n))) + 10

    g = -1
    succeeded = False
    rounds = 0
    for _ in range(max_rounds):
        g = learner(S)
        if any(fc.hypotheses[g, x] != y for x, y in S.items()):
            raise ValueError("learner returned an inconsistent hypothesis")
        delta_set = np.nonzero(fc.hypotheses[g] != target)[0]
        rounds += 1
        if delta_set.size <= eta:
            succeeded = True
            break
        s_before = len(S)
        w_before = w.copy()
        while w[delta_set].sum() < 1.0:
            w[delta_set] *= 2.0
            per_instance[delta_set] += 1
            doublings += 1
            crossed = delta_set[(w[delta_set] > thresholds[delta_set])]
            for x in crossed:
                if x not in S:
                    S[int(x)] = int(target[x])
        max_total = max(max_total, float(w.sum()))
        max_w = max(max_w, float(w.max()))
        min_w = min(min_w, float(w.min()))
        # invalidation check: any surviving rival whose disagreement region
        # holds weight >= 1 should already be contradicted by S
        for g2 in range(fc.n_hypotheses):
            if g2 == g_star:
                continue
            d2 = np.nonzero(fc.hypotheses[g2] != target)[0]
            if w[d2].sum() >= 1.0 and not any(
                fc.hypotheses[g2, x] != y for x, y in S.items()
            ):
                invalidation_missed = True
        if len(S) == s_before and np.array_equal(w, w_before):
            break  # stuck: nothing changed, the run has failed
    return TeachingReport(
        iterations=rounds,
        doublings=doublings,
        sample_size=len(S),
        succeeded=succeeded,
        final_hypothesis=int(g),
        per_instance_doublings=per_instance,
        max_weight=max_w,
        min_weight=min_w,
        max_total_weight=max_total,
        invalidation_missed=invalidation_missed,
    )


def verify_doubling_caps(reports, n_instances):
    """Per-instance doubling counts never exceed lg(2|X|)."""
    cap = np.log2(2 * n_instances)
    return all((r.per_instance_doublings <= cap).all() for r in reports)


def empirical_risk_projection(source, target_class):
    """pi(h) = index of the target-class hypothesis closest to h in
    normalized 0-1 disagreement, lowest index on ties."""
    out = np.empty(source.n_hypotheses, dtype=np.intp)
    for i in range(source.n_hypotheses):
        disagreements = np.mean(
            target_class.hypotheses != source.hypotheses[i], axis=1
        )
        out[i] = int(np.argmin(disagreements))
    return out


def explainer_gap(H, G, pi):
    """rho = worst-case disagreement between a hypothesis and its own
    projection."""
    return float(
        max(
            np.mean(H.hypotheses[h] != G.hypotheses[pi[h]])
            for h in range(H.n_hypotheses)
        )
    )


def explanation_teaching_pipeline(H, G, pi, h_star, delta=0.1, eta=0, seed=0, learner=None):
    """Teach the target's explanation, map the result back to a hypothesis,
    and check L(h, h*) <= L(g, g*) + 2*rho."""
    pi = np.asarray(pi, dtype=np.intp)
    if pi.shape != (H.n_hypotheses,):
        raise ValueError("pi must map every hypothesis of H")
    g_star = int(pi[h_star])
    report = teaching_oracle_run(G, g_star, learner=learner, delta=delta, eta=eta, seed=seed)
    g = report.final_hypothesis
    preimages = np.nonzero(pi == g)[0]
    if preimages.size == 0:
        raise ValueError(f"learned explanation {g} has no preimage; G is not contained in pi(H)")
    h = int(preimages[0])

    rho = explainer_gap(H, G, pi)
    L_h = float(np.mean(H.hypotheses[h] != H.hypotheses[h_star]))
    L_g = float(np.mean(G.hypotheses[g] != G.hypotheses[g_star]))
    report.rho = rho
    report.bound_ok = L_h <= L_g + 2.0 * rho + 1e-12
    report.extras.update({"h": h, "g": g, "L_h": L_h, "L_g": L_g})
    return report


def run_trials(fc, n_trials=200, delta=0.1, eta=0, seed=0, learner_factory=None):
    """Monte-Carlo teaching runs with per-trial bound checks against the
    brute-force minimal teaching set."""
    learner_factory = learner_factory or first_consistent_learner
    rows = []
    lg2x = np.log2(2 * fc.n_instances)
    rng = np.random.default_rng(seed)
    targets = rng.integers(fc.n_hypotheses, size=n_trials)
    for trial, g_star in enumerate(targets):
        g_star = int(g_star)
        ts = minimal_teaching_set(fc, g_star)
        report = teaching_oracle_run(
            fc,
            g_star,
            learner=learner_factory(fc),
            delta=delta,
            eta=eta,
            seed=child_seed(seed, trial),
        )
        doubling_cap = len(ts) * lg2x
        rows.append(
            {
                "trial": trial,
                "n_instances": fc.n_instances,
                "n_hypotheses": fc.n_hypotheses,
                "delta": delta,
                "eta": eta,
                "g_star": g_star,
                "teaching_set_size": len(ts),
                "iterations": report.iterations,
                "doublings": report.doublings,
                "sample_size": report.sample_size,
                "succeeded": report.succeeded,
                "bound_ok": bool(report.doublings <= doubling_cap + 1e-9),
                "expected_sample_bound": (1 + doubling_cap) * (np.log(fc.n_hypotheses) + np.log(1 / delta)),
                "min_weight": report.min_weight,
                "max_weight": report.max_weight,
                "max_total_weight": report.max_total_weight,
                "invalidation_missed": report.invalidation_missed,
            }
        )
    return rows


def write_trials_csv(rows, path):
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
