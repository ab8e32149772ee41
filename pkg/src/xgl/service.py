"""Live annotation sessions over HTTP/JSON.

A session runs the explanation-guided loop against a human supervisor:
create fits the initial model and returns the rule explanation; feedback
batches append labels, refit, and re-explain. Session state is in memory
with an append-only audit log snapshotted to disk on every mutation;
restart replays the logs. Reads are lock-free against the last completed
view; mutations of one session are serialized, and a refit that exceeds
the configured timeout answers 202 with a poll handle.
"""

import io
import json
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import learners
from .dataset import PreprocessSpec, build_dataset, load_and_preprocess
from .explain import SurrogateParams, distill, ruleset_to_obj, score_rules
from .metrics import build_series, macro_f1
from .validation import child_seed

API_VERSION = 1


def _draw_initial_labeled(pool, labels, seed, n_initial=5, min_per_class=2):
    from .dataset import _draw_initial

    rng = np.random.default_rng(child_seed(seed, 2))
    return _draw_initial(pool, labels, n_initial, min_per_class, rng)


@dataclass
class LiveSession:
    """Transport-independent session core; the HTTP layer only marshals.

    Fit seeds are derived exactly like the library loop's, so replaying a
    recorded query sequence through a session reproduces the library run
    bit for bit.
    """

    dataset: object
    spec: object
    seed: int
    surrogate: object
    pool: np.ndarray
    test_indices: np.ndarray
    feature_names: list
    dataset_name: str = ""
    labeled: dict = field(default_factory=dict)
    unlabeled: np.ndarray = None
    iteration: int = 0
    model: object = None
    ruleset: object = None
    query_log: list = field(default_factory=list)  # (iteration, idx, predicted, supervisor label)
    history: list = field(default_factory=list)
    view: dict = None  # last completed public snapshot, swapped atomically

    @classmethod
    def create(cls, dataset, spec, seed, surrogate=None, fold=None, dataset_name=""):
        surrogate = surrogate or SurrogateParams()
        if fold is None:
            pool = np.arange(dataset.n_rows)
            test_idx = np.arange(dataset.n_rows)
            initial = _draw_initial_labeled(pool, dataset.labels, seed)
        else:
            pool = np.asarray(fold["train"], dtype=np.intp)
            test_idx = np.asarray(fold["test"], dtype=np.intp)
            initial = np.asarray(fold["initial"], dtype=np.intp)
        session = cls(
            dataset=dataset,
            spec=spec,
            seed=int(seed),
            surrogate=surrogate,
            pool=pool,
            test_indices=test_idx,
            feature_names=[m.name for m in dataset.feature_meta],
            dataset_name=dataset_name,
            labeled={int(i): int(dataset.labels[i]) for i in initial},
            unlabeled=np.setdiff1d(pool, initial),
        )
        session._refit()
        session._publish()
        return session

    def _fit_seed(self):
        return child_seed(self.seed, 0, self.iteration)

    def _refit(self):
        idx = np.array(sorted(self.labeled), dtype=np.intp)
        y = np.array([self.labeled[i] for i in idx], dtype=np.int64)
        self.model = learners.fit(
            self.spec,
            self.dataset.features[idx],
            y,
            self.dataset.weights[idx],
            seed=self._fit_seed(),
        )
        ruleset = distill(self.model, self.dataset.features[self.pool], self.surrogate, seed=self.seed)
        self.ruleset = score_rules(ruleset, self.dataset.labels[self.pool])

    def _test_metrics(self):
        pred = self.model.predict(self.dataset.features[self.test_indices])
        truth = self.dataset.labels[self.test_indices]
        return macro_f1(pred, truth), float(np.mean(pred != truth))

    def submit_feedback(self, items):
        """items: [(index, label)]; returns per-item statuses. Accepted
        items form one loop iteration: predictions are logged at
        presentation time, then labels are appended and the model and
        explanation are recomputed (never patched in place)."""
        unlabeled = set(self.unlabeled.tolist())
        statuses, accepted = [], []
        seen = set()
        for idx, label in items:
            idx = int(idx)
            if label not in (0, 1):
                statuses.append({"id": idx, "accepted": False, "reason": "label must be 0 or 1"})
            elif idx in seen:
                statuses.append({"id": idx, "accepted": False, "reason": "duplicate in batch"})
            elif idx not in unlabeled:
                reason = "already labeled" if idx in self.labeled else "not in the unlabeled pool"
                statuses.append({"id": idx, "accepted": False, "reason": reason})
            else:
                statuses.append({"id": idx, "accepted": True, "reason": ""})
                accepted.append((idx, int(label)))
                seen.add(idx)
        if accepted:
            ids = [i for i, _ in accepted]
            predicted = self.model.predict(self.dataset.features[ids])
            self.iteration += 1
            for (idx, label), pred in zip(accepted, predicted):
                self.query_log.append((self.iteration, idx, int(pred), label))
                self.labeled[idx] = label
            self.unlabeled = np.setdiff1d(self.unlabeled, np.array(ids, dtype=np.intp))
            self._refit()
            test_f1, test_err = self._test_metrics()
            self.history.append(
                {
                    "test_f1": test_f1,
                    "test_err": test_err,
                    "fidelity": self.ruleset.fidelity,
                    "n_rules": len(self.ruleset),
                }
            )
        self._publish()
        return statuses, accepted

    def metric_series(self, window=5):
        if not self.history:
            return None
        preds = [p for _, _, p, _ in self.query_log]
        trues = [t for _, _, _, t in self.query_log]
        counts = np.bincount(
            [it - 1 for it, _, _, _ in self.query_log], minlength=self.iteration
        )
        expand = lambda key: [  # noqa: E731 - one-liner beats four defs
            self.history[it][key] for it in range(self.iteration) for _ in range(counts[it])
        ]
        return build_series(
            preds,
            trues,
            expand("test_f1"),
            expand("test_err"),
            fidelity=expand("fidelity"),
            n_rules=expand("n_rules"),
            window=window,
        )

    def _instances_for_rule(self, rule):
        rows = []
        for pos in rule.coverage:
            gidx = int(self.pool[pos])
            labeled = gidx in self.labeled
            rows.append(
                {
                    "id": gidx,
                    "features": self.dataset.features[gidx].tolist(),
                    "rule_label": rule.label,
                    "labeled": labeled,
                    "supervisor_label": self.labeled.get(gidx),
                }
            )
        return rows

    def status(self):
        return "exhausted" if self.unlabeled.size == 0 else "active"

    def _publish(self):
        """Rebuild the immutable public snapshot; readers only ever see a
        fully consistent view."""
        series = self.metric_series()
        by_rule = {str(r.id): self._instances_for_rule(r) for r in self.ruleset.rules}
        self.view = {
            "v": API_VERSION,
            "iteration": self.iteration,
            "status": self.status(),
            "labeled_count": len(self.labeled),
            "unlabeled_count": int(self.unlabeled.size),
            "explanation": ruleset_to_obj(self.ruleset, self.feature_names),
            "metrics": _series_obj(series),
            "feature_names": self.feature_names,
            "dataset": self.dataset_name,
            "instances_by_rule": by_rule,
        }


def _series_obj(series):
    if series is None:
        return {
            "v": API_VERSION,
            "iterations": [],
            "test_macro_f1": [],
            "query_macro_f1": [],
            "nb_experimental": [],
            "nb_narrative": [],
            "fidelity": [],
            "n_rules": [],
        }
    return {
        "v": API_VERSION,
        "iterations": series.iterations.tolist(),
        "test_macro_f1": series.test_macro_f1.tolist(),
        "query_macro_f1": series.query_macro_f1.tolist(),
        "nb_experimental": series.nb_experimental.tolist(),
        "nb_narrative": series.nb_narrative.tolist(),
        "fidelity": series.fidelity.tolist(),
        "n_rules": series.n_rules.tolist(),
    }


# ---------------------------------------------------------------------------
# Store with audit-log snapshots

class SessionStore:
    def __init__(self, data_dir=None, snapshot_dir=None):
        self.data_dir = data_dir
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        self._sessions = {}
        self._locks = {}
        self._audit = {}
        self._busy = {}
        self._store_lock = threading.Lock()
        if self.snapshot_dir and self.snapshot_dir.is_dir():
            for path in sorted(self.snapshot_dir.glob("*.json")):
                try:
                    self._recover(path)
                except Exception:  # noqa: BLE001 - a bad snapshot must not block startup
                    continue

    def _recover(self, path):
        audit = json.loads(path.read_text())["audit"]
        sid = path.stem
        session = self.replay(audit)
        with self._store_lock:
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
            self._busy[sid] = False
            self._audit[sid] = audit

    def replay(self, audit):
        session = self._create_session_from_event(audit[0])
        for event in audit[1:]:
            session.submit_feedback([(i, l) for i, l in event["items"]])
        return session

    def _build_dataset_from_event(self, event):
        if event.get("csv") is not None:
            spec = PreprocessSpec(**(event.get("preprocess") or {}))
            return load_and_preprocess(
                io.StringIO(event["csv"]), spec, seed=child_seed(event["seed"], 50)
            )
        return build_dataset(event["dataset"], seed=event["seed"], data_dir=self.data_dir)

    def _create_session_from_event(self, event):
        dataset = self._build_dataset_from_event(event)
        spec = learners.ModelSpec.from_dict(event["model"])
        surrogate = SurrogateParams(**(event.get("surrogate") or {}))
        return LiveSession.create(
            dataset,
            spec,
            seed=event["seed"],
            surrogate=surrogate,
            fold=event.get("fold"),
            dataset_name=event.get("dataset") or event.get("name") or "upload",
        )

    def create(self, event):
        session = self._create_session_from_event(event)
        sid = secrets.token_hex(16)
        with self._store_lock:
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
            self._busy[sid] = False
            self._audit[sid] = [event]
        self._snapshot(sid)
        return sid, session

    def get(self, sid):
        with self._store_lock:
            if sid not in self._sessions:
                raise KeyError(sid)
            return self._sessions[sid]

    def lock(self, sid):
        with self._store_lock:
            return self._locks[sid]

    def set_busy(self, sid, value):
        with self._store_lock:
            self._busy[sid] = value

    def is_busy(self, sid):
        with self._store_lock:
            return self._busy.get(sid, False)

    def record_feedback(self, sid, items):
        self._audit[sid].append(
            {"event": "feedback", "items": [[int(i), int(l)] for i, l in items]}
        )
        self._snapshot(sid)

    def audit_log(self, sid):
        return list(self._audit[sid])

    def _snapshot(self, sid):
        if not self.snapshot_dir:
            return
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        path = self.snapshot_dir / f"{sid}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"v": API_VERSION, "audit": self._audit[sid]}))
        tmp.replace(path)


# ---------------------------------------------------------------------------
# HTTP layer

class FoldSpec(BaseModel):
    train: list[int]
    test: list[int]
    initial: list[int]


class CreateRequest(BaseModel):
    v: int = API_VERSION
    dataset: str | None = None
    csv: str | None = None
    name: str | None = None
    preprocess: dict | None = None
    model: dict = Field(default_factory=lambda: {"kind": "gradient_boosted_trees"})
    seed: int = 0
    surrogate: dict | None = None
    fold: FoldSpec | None = None


class FeedbackItem(BaseModel):
    id: int
    label: int


class FeedbackRequest(BaseModel):
    v: int = API_VERSION
    instances: list[FeedbackItem]


def create_app(data_dir=None, snapshot_dir=None, refit_timeout=None):
    """refit_timeout: seconds a feedback request waits for the refit before
    answering 202 with a poll handle (None waits indefinitely)."""
    app = FastAPI(title="xgl session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(data_dir=data_dir, snapshot_dir=snapshot_dir)
    app.state.store = store

    def _session_or_404(sid):
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session") from None

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateRequest):
        if req.v != API_VERSION:
            raise HTTPException(status_code=422, detail=f"unsupported schema version {req.v}")
        if (req.dataset is None) == (req.csv is None):
            raise HTTPException(status_code=422, detail="provide exactly one of dataset/csv")
        event = {
            "event": "create",
            "dataset": req.dataset,
            "csv": req.csv,
            "name": req.name,
            "preprocess": req.preprocess,
            "model": req.model,
            "seed": req.seed,
            "surrogate": req.surrogate,
            "fold": req.fold.model_dump() if req.fold else None,
        }
        try:
            sid, session = store.create(event)
        except (KeyError, FileNotFoundError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        view = dict(session.view)
        view["id"] = sid
        return view

    @app.get("/sessions/{sid}")
    def session_status(sid: str):
        session = _session_or_404(sid)
        view = dict(session.view)
        view["id"] = sid
        view["busy"] = store.is_busy(sid)
        return view

    @app.get("/sessions/{sid}/explanation")
    def explanation(sid: str):
        return _session_or_404(sid).view["explanation"]

    @app.get("/sessions/{sid}/metrics")
    def metrics(sid: str):
        return _session_or_404(sid).view["metrics"]

    @app.get("/sessions/{sid}/instances")
    def instances(sid: str, rule: int):
        view = _session_or_404(sid).view
        rows = view["instances_by_rule"].get(str(rule))
        if rows is None:
            raise HTTPException(status_code=404, detail=f"no rule with id {rule}")
        return {"v": API_VERSION, "rule_id": rule, "instances": rows}

    @app.post("/sessions/{sid}/feedback")
    def feedback(sid: str, req: FeedbackRequest):
        if req.v != API_VERSION:
            raise HTTPException(status_code=422, detail=f"unsupported schema version {req.v}")
        session = _session_or_404(sid)
        lock = store.lock(sid)
        lock.acquire()  # serializes mutations of one session (FIFO-queued)
        result = {}
        done = threading.Event()

        def work():
            try:
                statuses, accepted = session.submit_feedback(
                    [(i.id, i.label) for i in req.instances]
                )
                if accepted:
                    store.record_feedback(sid, accepted)
                result["statuses"] = statuses
            except Exception as exc:  # noqa: BLE001 - surfaced via the result dict
                result["error"] = exc
            finally:
                store.set_busy(sid, False)
                done.set()
                lock.release()

        store.set_busy(sid, True)
        worker = threading.Thread(target=work, daemon=True)
        worker.start()
        if not done.wait(timeout=refit_timeout):
            return JSONResponse(
                status_code=202,
                content={"v": API_VERSION, "id": sid, "status": "busy", "poll": f"/sessions/{sid}"},
            )
        if "error" in result:
            raise HTTPException(status_code=500, detail=str(result["error"]))
        view = dict(session.view)
        view.update({"id": sid, "statuses": result["statuses"]})
        return view

    @app.get("/sessions/{sid}/audit")
    def audit(sid: str):
        _session_or_404(sid)
        return {"v": API_VERSION, "audit": store.audit_log(sid)}

    return app
