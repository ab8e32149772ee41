"""Config-driven experiment runner: the full evaluation matrix with
incremental, resumable, byte-deterministic CSV outputs."""

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import learners
from .dataset import PreprocessSpec, build_dataset, load_and_preprocess, default_model_spec, stratified_kfold
from .explain import SurrogateParams
from .metrics import build_series, macro_f1
from .protocols import SupervisorSim, run_loop
from .validation import child_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PASSIVE = "passive"
ALL_STRATEGIES = ("random", "al_unc", "al_repr", "gl", "xgl", PASSIVE)

RECORD_COLUMNS = [
    "iteration",
    "instance_id",
    "predicted_label",
    "true_label",
    "rule_id",
    "test_macro_f1",
    "query_macro_f1",
    "query_macro_f1_smoothed",
    "query_correct_smoothed",
    "nb_experimental",
    "nb_narrative",
    "nb_formal",
    "fidelity",
    "n_rules",
    "picked_worst",
]


@dataclass
class DatasetEntry:
    name: str
    path: str | None = None
    preprocess: dict = field(default_factory=dict)
    uu: dict | None = None
    model: dict | None = None

    def resolve_model_spec(self):
        if self.model is not None:
            return learners.ModelSpec.from_dict(self.model)
        return default_model_spec(self.name)


@dataclass
class ExperimentConfig:
    datasets: list
    strategies: list
    folds: int = 5
    budget: int = 100
    theta: float = 100.0
    seeds: list = field(default_factory=lambda: [0])
    output_dir: str = "out"
    window: int = 5
    surrogate: dict = field(default_factory=dict)
    data_dir: str | None = None

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not self.datasets or not self.strategies:
            raise ValueError("need at least one dataset and one strategy")
        for s in self.strategies:
            if s not in ALL_STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")
        self.datasets = [
            d if isinstance(d, DatasetEntry) else DatasetEntry(**d) for d in self.datasets
        ]

    def surrogate_params(self):
        return SurrogateParams(**self.surrogate) if self.surrogate else SurrogateParams()

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        text = path.read_bytes()
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text.decode("utf-8"))
        return cls(**raw)


def _record_path(out_dir, dataset, strategy, fold, seed):
    return Path(out_dir) / "records" / f"{dataset}__{strategy}__f{fold}__s{seed}.csv"


def _run_keys(cfg):
    for entry in cfg.datasets:
        for seed in cfg.seeds:
            for fold in range(cfg.folds):
                for strategy in cfg.strategies:
                    yield entry, strategy, fold, seed


def build_entry_dataset(entry, seed, data_dir=None):
    """Materialize one config dataset entry (registry name or custom CSV)."""
    if entry.path is not None:
        spec = PreprocessSpec(**entry.preprocess) if entry.preprocess else PreprocessSpec()
        d = load_and_preprocess(entry.path, spec, seed=child_seed(seed, 900))
        if entry.name.endswith("+uu") or entry.uu is not None:
            from .dataset import inject_uu

            params = {"k": 100, "n_flip": 10, "flip_weight": 25.0}
            params.update(entry.uu or {})
            d = inject_uu(
                d,
                k=min(params["k"], d.n_rows),
                n_flip=params["n_flip"],
                flip_weight=params["flip_weight"],
                seed=child_seed(seed, 901),
            )
        return d
    return build_dataset(entry.name, seed=seed, data_dir=data_dir, uu_params=entry.uu)


def _run_one_key(cfg, entry, strategy, fold_idx, seed):
    """Execute a single (dataset, strategy, fold, seed) cell and return its
    per-iteration rows."""
    dataset = build_entry_dataset(entry, seed, data_dir=cfg.data_dir)
    folds = stratified_kfold(dataset, cfg.folds, seed=seed)
    fold = folds[fold_idx]
    spec = entry.resolve_model_spec()
    run_seed = child_seed(seed, 7, fold_idx)

    if strategy == PASSIVE:
        model = learners.fit(
            spec,
            dataset.features[fold.train_indices],
            dataset.labels[fold.train_indices],
            dataset.weights[fold.train_indices],
            seed=run_seed,
        )
        pred = model.predict(dataset.features[fold.test_indices])
        f1 = macro_f1(pred, dataset.labels[fold.test_indices])
        rows = [
            {
                "iteration": t + 1,
                "instance_id": -1,
                "predicted_label": -1,
                "true_label": -1,
                "rule_id": -1,
                "test_macro_f1": f1,
                "query_macro_f1": "",
                "query_macro_f1_smoothed": "",
                "query_correct_smoothed": "",
                "nb_experimental": "",
                "nb_narrative": "",
                "nb_formal": "",
                "fidelity": "",
                "n_rules": -1,
                "picked_worst": "",
            }
            for t in range(cfg.budget)
        ]
        return rows, model.fingerprint

    sim = SupervisorSim(
        theta=cfg.theta, truth_oracle=dataset.labels, seed=child_seed(seed, 8, fold_idx)
    )
    model, state = run_loop(
        dataset,
        fold,
        strategy,
        spec,
        budget=cfg.budget,
        sim=sim,
        seed=run_seed,
        surrogate=cfg.surrogate_params(),
        window=cfg.window,
    )
    series = build_series(
        [q.predicted for q in state.query_log],
        [q.true for q in state.query_log],
        [h["test_f1"] for h in state.history],
        [h["test_err"] for h in state.history],
        fidelity=[h["fidelity"] for h in state.history],
        n_rules=[h["n_rules"] for h in state.history],
        window=cfg.window,
        dataset=entry.name,
        strategy=strategy,
        fold=fold_idx,
        seed=seed,
    )
    rows = []
    for i, q in enumerate(state.query_log):
        rows.append(
            {
                "iteration": q.iteration,
                "instance_id": q.index,
                "predicted_label": q.predicted,
                "true_label": q.true,
                "rule_id": q.rule_id,
                "test_macro_f1": series.test_macro_f1[i],
                "query_macro_f1": series.query_macro_f1[i],
                "query_macro_f1_smoothed": series.query_macro_f1_smoothed[i],
                "query_correct_smoothed": series.query_correct_smoothed[i],
                "nb_experimental": series.nb_experimental[i],
                "nb_narrative": series.nb_narrative[i],
                "nb_formal": series.nb_formal[i],
                "fidelity": "" if np.isnan(series.fidelity[i]) else series.fidelity[i],
                "n_rules": series.n_rules[i],
                "picked_worst": _picked_worst_cell(state.history[i]),
            }
        )
    return rows, model.fingerprint


def _picked_worst_cell(record):
    value = record.get("picked_worst")
    return "" if value is None else int(value)


def _write_record(path, rows, meta):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    tmp.replace(path)
    meta_path = path.with_suffix(".meta.json")
    meta_tmp = meta_path.with_suffix(".tmp")
    meta_tmp.write_text(json.dumps(meta, sort_keys=True))
    meta_tmp.replace(meta_path)


def _key_worker(args):
    cfg_dict, entry_dict, strategy, fold, seed = args
    cfg = ExperimentConfig(**cfg_dict)
    entry = DatasetEntry(**entry_dict)
    rows, fingerprint = _run_one_key(cfg, entry, strategy, fold, seed)
    return rows, list(fingerprint)


def run_experiment(cfg, workers=1, resume=True, log=print):
    """Run the full matrix; returns (n_completed, n_failed).

    Completed keys on disk are skipped when resume is on; any key failure is
    logged and the remaining keys still run.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(_run_keys(cfg))
    todo = []
    for entry, strategy, fold, seed in keys:
        path = _record_path(out, entry.name, strategy, fold, seed)
        if resume and path.exists() and path.with_suffix(".meta.json").exists():
            continue
        todo.append((entry, strategy, fold, seed))
    log(f"{len(keys)} keys total, {len(todo)} to run")

    failed = 0
    cfg_dict = {
        "datasets": [vars(e) for e in cfg.datasets],
        "strategies": cfg.strategies,
        "folds": cfg.folds,
        "budget": cfg.budget,
        "theta": cfg.theta,
        "seeds": cfg.seeds,
        "output_dir": cfg.output_dir,
        "window": cfg.window,
        "surrogate": cfg.surrogate,
        "data_dir": cfg.data_dir,
    }

    def finish(entry, strategy, fold, seed, result, error):
        nonlocal failed
        path = _record_path(out, entry.name, strategy, fold, seed)
        if error is not None:
            failed += 1
            log(f"FAILED {path.stem}: {error}")
            return
        rows, fingerprint = result
        meta = {
            "dataset": entry.name,
            "strategy": strategy,
            "fold": fold,
            "seed": seed,
            "theta": cfg.theta,
            "fingerprint": list(fingerprint),
        }
        _write_record(path, rows, meta)
        log(f"done {path.stem}")

    if workers <= 1:
        for entry, strategy, fold, seed in todo:
            try:
                result = _run_one_key(cfg, entry, strategy, fold, seed)
                finish(entry, strategy, fold, seed, result, None)
            except Exception as exc:  # noqa: BLE001 - key isolation is the contract
                finish(entry, strategy, fold, seed, None, exc)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            args = [
                (cfg_dict, vars(entry), strategy, fold, seed)
                for entry, strategy, fold, seed in todo
            ]
            futures = [pool.submit(_key_worker, a) for a in args]
            for (entry, strategy, fold, seed), fut in zip(todo, futures):
                try:
                    finish(entry, strategy, fold, seed, fut.result(), None)
                except Exception as exc:  # noqa: BLE001
                    finish(entry, strategy, fold, seed, None, exc)

    done = len(keys) - len(todo) + len(todo) - failed
    return done, failed


def _read_record(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_records(records_dir):
    """All persisted records keyed by (dataset, strategy, fold, seed)."""
    records = {}
    for path in sorted(Path(records_dir).glob("*.csv")):
        meta_path = path.with_suffix(".meta.json")
        if not meta_path.exists():
            continue
        meta = json.loads(meta_path.read_text())
        key = (meta["dataset"], meta["strategy"], meta["fold"], meta["seed"])
        records[key] = (_read_record(path), meta)
    return records


def _mean(values):
    return sum(values) / len(values) if values else float("nan")


def summarize(records):
    """Per (dataset, strategy) table: mean/std F1 and mean narrative bias,
    with per-dataset best flags (passive excluded from the flags)."""
    if not records:
        raise ValueError("no records to summarize")
    groups = {}
    for (dataset, strategy, fold, seed), (rows, _meta) in records.items():
        groups.setdefault((dataset, strategy), []).append((fold, seed, rows))

    table = []
    for (dataset, strategy), members in sorted(groups.items()):
        runs = [rows for _fold, _seed, rows in sorted(members, key=lambda m: (m[0], m[1]))]
        run_f1 = [_mean([float(r["test_macro_f1"]) for r in rows]) for rows in runs]
        nb_vals, nbc_vals = [], []
        for rows in runs:
            nb = [float(r["nb_narrative"]) for r in rows if r["nb_narrative"] != ""]
            nbc = [
                float(r["query_macro_f1"]) - float(r["test_macro_f1"])
                for r in rows
                if r["query_macro_f1"] != ""
            ]
            if nb:
                nb_vals.append(_mean(nb))
            if nbc:
                nbc_vals.append(_mean(nbc))
        mean_f1 = _mean(run_f1)
        std_f1 = float(np.std(run_f1)) if run_f1 else float("nan")
        table.append(
            {
                "dataset": dataset,
                "strategy": strategy,
                "mean_f1": mean_f1,
                "std_f1": std_f1,
                "mean_nb": _mean(nb_vals) if nb_vals else float("nan"),
                "mean_nb_cumulative": _mean(nbc_vals) if nbc_vals else float("nan"),
                "n_runs": len(runs),
            }
        )

    by_dataset = {}
    for row in table:
        if row["strategy"] != PASSIVE:
            by_dataset.setdefault(row["dataset"], []).append(row)
    for rows in by_dataset.values():
        best_f1 = max(r["mean_f1"] for r in rows)
        nb_candidates = [r["mean_nb"] for r in rows if not np.isnan(r["mean_nb"])]
        best_nb = min(nb_candidates) if nb_candidates else float("nan")
        for r in rows:
            r["best_f1"] = int(r["mean_f1"] == best_f1)
            r["best_nb"] = int(not np.isnan(r["mean_nb"]) and r["mean_nb"] == best_nb)
    for row in table:
        row.setdefault("best_f1", 0)
        row.setdefault("best_nb", 0)
    return table


SUMMARY_COLUMNS = [
    "dataset",
    "strategy",
    "mean_f1",
    "std_f1",
    "mean_nb",
    "mean_nb_cumulative",
    "n_runs",
    "best_f1",
    "best_nb",
]


def write_summary(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in sorted(table, key=lambda r: (r["dataset"], r["strategy"])):
            writer.writerow(row)


CURVE_COLUMNS = ["dataset", "strategy", "iteration", "mean_test_f1", "mean_nb", "mean_fidelity", "n_runs"]


def write_curves(records, path):
    """Per-iteration means across runs, for curve plotting."""
    groups = {}
    for (dataset, strategy, fold, seed), (rows, _meta) in records.items():
        groups.setdefault((dataset, strategy), []).append((fold, seed, rows))
    out = []
    for (dataset, strategy), members in sorted(groups.items()):
        runs = [rows for _f, _s, rows in sorted(members, key=lambda m: (m[0], m[1]))]
        horizon = min(len(rows) for rows in runs)
        for t in range(horizon):
            f1 = [float(rows[t]["test_macro_f1"]) for rows in runs]
            nb = [float(rows[t]["nb_narrative"]) for rows in runs if rows[t]["nb_narrative"] != ""]
            fid = [float(rows[t]["fidelity"]) for rows in runs if rows[t]["fidelity"] != ""]
            out.append(
                {
                    "dataset": dataset,
                    "strategy": strategy,
                    "iteration": t + 1,
                    "mean_test_f1": _mean(f1),
                    "mean_nb": _mean(nb) if nb else "",
                    "mean_fidelity": _mean(fid) if fid else "",
                    "n_runs": len(runs),
                }
            )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(out)


def summarize_dir(output_dir):
    records = load_records(Path(output_dir) / "records")
    table = summarize(records)
    write_summary(table, Path(output_dir) / "summary.csv")
    write_curves(records, Path(output_dir) / "curves.csv")
    return table


def theta_sweep(cfg, thetas, workers=1, resume=True, log=print):
    """Re-run the xgl arm across attention values, everything else fixed."""
    results = {}
    failures = 0
    for theta in thetas:
        sub = ExperimentConfig(
            datasets=[vars(e) for e in cfg.datasets],
            strategies=["xgl"],
            folds=cfg.folds,
            budget=cfg.budget,
            theta=float(theta),
            seeds=cfg.seeds,
            output_dir=str(Path(cfg.output_dir) / f"theta_{theta:g}"),
            window=cfg.window,
            surrogate=cfg.surrogate,
            data_dir=cfg.data_dir,
        )
        _done, failed = run_experiment(sub, workers=workers, resume=resume, log=log)
        failures += failed
        results[float(theta)] = summarize_dir(sub.output_dir)
    return results, failures
