"""Task data: synthetic generation, tabular ingestion, unknown-unknown
injection, and stratified splits.

All randomized operations are pure functions of their inputs and seed, and
Dataset instances are immutable after construction.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .base import BaseEstimator
from .kmeans import KMeans
from .validation import check_binary_labels, check_matrix, check_weights, child_seed

NUMERIC = "numeric"
CATEGORICAL = "categorical-encoded"


@dataclass(frozen=True)
class FeatureMeta:
    name: str
    kind: str


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    feature_meta: tuple
    provenance: str = ""

    def __post_init__(self):
        X = check_matrix(self.features)
        y = check_binary_labels(self.labels, X.shape[0])
        w = check_weights(self.weights, X.shape[0])
        meta = tuple(self.feature_meta)
        if len(meta) != X.shape[1]:
            raise ValueError("feature_meta length must match feature count")
        for arr in (X, y, w):
            arr.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_meta", meta)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def replace(self, **kw):
        fields = {
            "features": self.features,
            "labels": self.labels,
            "weights": self.weights,
            "feature_meta": self.feature_meta,
            "provenance": self.provenance,
        }
        fields.update(kw)
        return Dataset(**fields)


@dataclass(frozen=True)
class PreprocessSpec:
    """How to turn a raw CSV into a model-ready Dataset.

    encoding/scaling/imputation are dataset-level policies: categorical
    columns are always mode-imputed, numeric columns follow ``imputation``.
    """

    encoding: str = "onehot"  # onehot | label
    scaling: str = "standardize"  # standardize | minmax | none
    imputation: str = "median"  # median | mode
    subsample_fraction: float | None = None
    feature_selection: int | None = None
    categorical: tuple = ()
    label_column: str | None = None
    positive_label: object = None

    def __post_init__(self):
        if self.encoding not in ("onehot", "label"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.scaling not in ("standardize", "minmax", "none"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if self.imputation not in ("median", "mode"):
            raise ValueError(f"unknown imputation {self.imputation!r}")
        if self.subsample_fraction is not None and not (0.0 < self.subsample_fraction <= 1.0):
            raise ValueError("subsample_fraction must be in (0, 1]")
        if self.feature_selection is not None and self.feature_selection < 1:
            raise ValueError("feature_selection must be >= 1")
        object.__setattr__(self, "categorical", tuple(self.categorical))


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_indices: np.ndarray
    test_indices: np.ndarray
    initial_labeled: np.ndarray

    def __post_init__(self):
        tr = np.asarray(self.train_indices, dtype=np.intp)
        te = np.asarray(self.test_indices, dtype=np.intp)
        init = np.asarray(self.initial_labeled, dtype=np.intp)
        if np.intersect1d(tr, te).size:
            raise ValueError("train and test indices overlap")
        if not np.isin(init, tr).all():
            raise ValueError("initial_labeled must be a subset of train_indices")
        for arr in (tr, te, init):
            arr.setflags(write=False)
        object.__setattr__(self, "train_indices", tr)
        object.__setattr__(self, "test_indices", te)
        object.__setattr__(self, "initial_labeled", init)


# ---------------------------------------------------------------------------
# Synthetic task

def synthetic_centers(grid_side=5):
    """Cluster centers on a regular grid inside the unit square."""
    spacing = 1.0 / grid_side
    axis = spacing / 2.0 + spacing * np.arange(grid_side)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def generate_synthetic(seed, n_red=100, n_blue=941, grid_side=5, cluster_std=0.02):
    """Gaussian positive clusters on a grid plus uniform negative background.

    Red points are redrawn until they fall within the exclusion radius
    (3 * cluster_std) of their own center; blue points are rejected from
    every exclusion disk. With the default geometry the disks are disjoint,
    so each red point belongs to exactly one cluster.
    """
    if grid_side < 1 or n_red < 1 or n_blue < 0:
        raise ValueError("counts must be positive")
    n_clusters = grid_side * grid_side
    if n_red % n_clusters != 0:
        raise ValueError(f"n_red must be divisible by {n_clusters}")
    spacing = 1.0 / grid_side
    if cluster_std >= spacing / 2.0:
        raise ValueError("cluster_std must be below half the grid spacing")

    rng = np.random.default_rng(seed)
    centers = synthetic_centers(grid_side)
    radius = 3.0 * cluster_std
    per_cluster = n_red // n_clusters

    reds = []
    for c in centers:
        need = per_cluster
        points = []
        while need > 0:
            draw = rng.normal(c, cluster_std, size=(max(need * 2, 8), 2))
            keep = np.sum((draw - c) ** 2, axis=1) <= radius * radius
            draw = np.clip(draw[keep], 0.0, 1.0)
            points.append(draw[:need])
            need -= len(draw[:need])
        reds.append(np.vstack(points))
    reds = np.vstack(reds)

    blues = []
    need = n_blue
    while need > 0:
        draw = rng.uniform(0.0, 1.0, size=(max(need * 2, 8), 2))
        d2 = (
            np.sum(draw * draw, axis=1)[:, None]
            + np.sum(centers * centers, axis=1)[None, :]
            - 2.0 * draw @ centers.T
        )
        keep = d2.min(axis=1) > radius * radius
        draw = draw[keep]
        blues.append(draw[:need])
        need -= len(draw[:need])
    blues = np.vstack(blues) if blues else np.empty((0, 2))

    X = np.vstack([reds, blues])
    y = np.concatenate([np.ones(len(reds), dtype=np.int64), np.zeros(len(blues), dtype=np.int64)])
    meta = (FeatureMeta("x1", NUMERIC), FeatureMeta("x2", NUMERIC))
    return Dataset(
        features=X,
        labels=y,
        weights=np.ones(len(X)),
        feature_meta=meta,
        provenance=f"synthetic(seed={seed})",
    )


def synthetic_cluster_of(points, grid_side=5, cluster_std=0.02):
    """Index of the exclusion disk containing each point, -1 if none."""
    centers = synthetic_centers(grid_side)
    radius = 3.0 * cluster_std
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d2 = (
        np.sum(pts * pts, axis=1)[:, None]
        + np.sum(centers * centers, axis=1)[None, :]
        - 2.0 * pts @ centers.T
    )
    best = np.argmin(d2, axis=1)
    inside = d2[np.arange(len(pts)), best] <= radius * radius
    return np.where(inside, best, -1)


# ---------------------------------------------------------------------------
# Tabular ingestion

class TablePreprocessor(BaseEstimator):
    """Fitted imputation + encoding + scaling over a pandas frame.

    fit() learns per-column statistics; transform() is a pure function of
    them, so preprocessing is idempotent: fit_transform of an already
    fit_transformed table is the identity (up to float noise).
    """

    def __init__(self, encoding="onehot", scaling="standardize", imputation="median", categorical=()):
        self.encoding = encoding
        self.scaling = scaling
        self.imputation = imputation
        self.categorical = tuple(categorical)

    def fit(self, frame):
        self.columns_ = list(frame.columns)
        cat_cols = set(self.categorical) | {
            c for c in frame.columns if frame[c].dtype == object
        }
        self.plan_ = []
        for col in frame.columns:
            series = frame[col]
            if col in cat_cols:
                non_null = series.dropna()
                mode = sorted(non_null.mode().tolist())[0] if len(non_null) else 0
                cats = sorted(non_null.unique().tolist())
                self.plan_.append({"col": col, "kind": "cat", "fill": mode, "cats": cats})
            else:
                vals = pd.to_numeric(series, errors="raise").astype(float)
                non_null = vals.dropna()
                if self.imputation == "median":
                    fill = float(non_null.median()) if len(non_null) else 0.0
                else:
                    fill = float(sorted(non_null.mode().tolist())[0]) if len(non_null) else 0.0
                filled = vals.fillna(fill)
                entry = {"col": col, "kind": "num", "fill": fill}
                if self.scaling == "standardize":
                    entry["mean"] = float(filled.mean())
                    sd = float(filled.std(ddof=0))
                    entry["scale"] = sd if sd > 0 else 1.0
                elif self.scaling == "minmax":
                    lo, hi = float(filled.min()), float(filled.max())
                    entry["lo"] = lo
                    entry["range"] = (hi - lo) if hi > lo else 1.0
                self.plan_.append(entry)
        return self

    def transform(self, frame):
        if list(frame.columns) != self.columns_:
            raise ValueError("column mismatch with fitted frame")
        blocks, meta = [], []
        for entry in self.plan_:
            series = frame[entry["col"]]
            if entry["kind"] == "cat":
                filled = series.where(~series.isna(), entry["fill"])
                if self.encoding == "onehot":
                    for cat in entry["cats"]:
                        blocks.append((filled == cat).to_numpy(dtype=np.float64))
                        meta.append(FeatureMeta(f"{entry['col']}={cat}", CATEGORICAL))
                else:
                    codes = {cat: i for i, cat in enumerate(entry["cats"])}
                    blocks.append(
                        filled.map(lambda v: codes.get(v, -1)).to_numpy(dtype=np.float64)
                    )
                    meta.append(FeatureMeta(entry["col"], CATEGORICAL))
            else:
                vals = pd.to_numeric(series, errors="raise").astype(float).fillna(entry["fill"])
                x = vals.to_numpy(dtype=np.float64)
                if self.scaling == "standardize":
                    x = (x - entry["mean"]) / entry["scale"]
                elif self.scaling == "minmax":
                    x = (x - entry["lo"]) / entry["range"]
                blocks.append(x)
                meta.append(FeatureMeta(entry["col"], NUMERIC))
        X = np.column_stack(blocks) if blocks else np.empty((len(frame), 0))
        return X, tuple(meta)

    def fit_transform(self, frame):
        return self.fit(frame).transform(frame)


def _select_features(X, y, meta, k):
    from .tree import DecisionTreeClassifier

    if k > X.shape[1]:
        raise ValueError("feature_selection exceeds column count")
    probe = DecisionTreeClassifier(max_depth=25, min_leaf=1).fit(X, y)
    ranked = np.argsort(-probe.feature_importances_, kind="stable")[:k]
    keep = np.sort(ranked)
    return X[:, keep], tuple(meta[i] for i in keep)


def load_and_preprocess(path, spec, seed):
    """Read a CSV (header row, '?' or empty as missing) into a Dataset."""
    try:
        frame = pd.read_csv(path, na_values=["?"], skipinitialspace=True)
    except Exception as exc:
        raise ValueError(f"could not parse {path}: {exc}") from exc
    if frame.shape[0] == 0 or frame.shape[1] < 2:
        raise ValueError(f"{path}: empty or single-column file")

    label_col = spec.label_column
    if label_col is None:
        cols = [c for c in frame.columns if c != "weight"]
        label_col = cols[-1]
    if label_col not in frame.columns:
        raise ValueError(f"{path}: label column {label_col!r} not found")

    raw_labels = frame[label_col]
    if raw_labels.isna().any():
        raise ValueError(f"{path}: missing values in label column")
    values = sorted(raw_labels.unique().tolist())
    if len(values) != 2:
        raise ValueError(f"{path}: label column has {len(values)} distinct values, need 2")
    positive = spec.positive_label if spec.positive_label is not None else values[1]
    if positive not in values:
        raise ValueError(f"{path}: positive label {positive!r} not present")
    y = (raw_labels == positive).to_numpy(dtype=np.int64)

    if "weight" in frame.columns:
        w = frame["weight"].to_numpy(dtype=np.float64)
        body = frame.drop(columns=[label_col, "weight"])
    else:
        w = np.ones(len(frame))
        body = frame.drop(columns=[label_col])

    if spec.subsample_fraction is not None and spec.subsample_fraction < 1.0:
        rng = np.random.default_rng(child_seed(seed, 0))
        keep = []
        for cls in (0, 1):
            idx = np.nonzero(y == cls)[0]
            take = max(1, int(round(spec.subsample_fraction * len(idx)))) if len(idx) else 0
            if take:
                keep.append(rng.choice(idx, size=take, replace=False))
        keep = np.sort(np.concatenate(keep)) if keep else np.array([], dtype=np.intp)
        if keep.size == 0 or len(np.unique(y[keep])) < 2:
            raise ValueError("dataset empty or single-class after subsampling")
        body = body.iloc[keep].reset_index(drop=True)
        y = y[keep]
        w = w[keep]

    pre = TablePreprocessor(
        encoding=spec.encoding,
        scaling=spec.scaling,
        imputation=spec.imputation,
        categorical=spec.categorical,
    )
    X, meta = pre.fit_transform(body)

    if spec.feature_selection is not None:
        X, meta = _select_features(X, y, meta, spec.feature_selection)

    return Dataset(
        features=X,
        labels=y,
        weights=w,
        feature_meta=meta,
        provenance="inline-csv" if hasattr(path, "read") else str(path),
    )


def save_csv(dataset, path):
    """Export features plus trailing 'label' and 'weight' columns."""
    frame = pd.DataFrame(
        dataset.features, columns=[m.name for m in dataset.feature_meta]
    )
    frame["label"] = dataset.labels
    frame["weight"] = dataset.weights
    frame.to_csv(path, index=False)


# ---------------------------------------------------------------------------
# Unknown-unknown injection

def inject_uu(d, k=100, n_flip=10, flip_weight=25.0, seed=0):
    """Flip the labels of n_flip random k-means clusters and up-weight them.

    Only the chosen clusters' rows change; everything else is untouched.
    """
    if k > d.n_rows:
        raise ValueError("k exceeds row count")
    if n_flip > k or n_flip < 0:
        raise ValueError("n_flip must be in [0, k]")
    if flip_weight <= 0:
        raise ValueError("flip_weight must be positive")
    if n_flip == 0:
        return d

    km = KMeans(n_clusters=k, random_state=child_seed(seed, 0)).fit(d.features)
    assignments = km.labels_
    nonempty = np.unique(assignments)
    if len(nonempty) < n_flip:
        raise ValueError("not enough non-empty clusters to flip")
    rng = np.random.default_rng(child_seed(seed, 1))
    chosen = rng.choice(nonempty, size=n_flip, replace=False)
    mask = np.isin(assignments, chosen)

    labels = d.labels.copy()
    weights = d.weights.copy()
    labels[mask] = 1 - labels[mask]
    weights[mask] = flip_weight
    return d.replace(labels=labels, weights=weights, provenance=d.provenance + "+uu")


# ---------------------------------------------------------------------------
# Stratified cross-validation folds

def _draw_initial(train_idx, labels, n_initial, min_per_class, rng):
    """Uniform n-subset of the train pool with >= min_per_class per class,
    via rejection sampling (falls back to direct composition)."""
    for _ in range(10_000):
        pick = rng.choice(train_idx, size=n_initial, replace=False)
        counts = np.bincount(labels[pick], minlength=2)
        if (counts >= min_per_class).all():
            return np.sort(pick)
    parts = []
    for cls in (0, 1):
        cls_idx = train_idx[labels[train_idx] == cls]
        parts.append(rng.choice(cls_idx, size=min_per_class, replace=False))
    rest = np.setdiff1d(train_idx, np.concatenate(parts))
    extra = n_initial - 2 * min_per_class
    if extra > 0:
        parts.append(rng.choice(rest, size=extra, replace=False))
    return np.sort(np.concatenate(parts))


def stratified_kfold(d, k, seed, n_initial=5, min_per_class=2):
    """K folds with per-class counts balanced within one instance, each
    carrying a seeded initial labeled set."""
    if k < 2:
        raise ValueError("k must be >= 2")
    counts = np.bincount(d.labels, minlength=2)
    if (counts < k).any():
        raise ValueError("each class needs at least k members for stratification")
    rng = np.random.default_rng(child_seed(seed, 0))
    fold_of = np.empty(d.n_rows, dtype=np.intp)
    for cls in (0, 1):
        idx = np.nonzero(d.labels == cls)[0]
        idx = rng.permutation(idx)
        fold_of[idx] = np.arange(len(idx)) % k

    splits = []
    all_rows = np.arange(d.n_rows)
    for f in range(k):
        test = all_rows[fold_of == f]
        train = all_rows[fold_of != f]
        train_counts = np.bincount(d.labels[train], minlength=2)
        if (train_counts < min_per_class).any():
            raise ValueError("a class is too small for the initial labeled set")
        init_rng = np.random.default_rng(child_seed(seed, 1, f))
        initial = _draw_initial(train, d.labels, n_initial, min_per_class, init_rng)
        splits.append(
            FoldSplit(
                fold_index=f,
                train_indices=train,
                test_indices=test,
                initial_labeled=initial,
            )
        )
    return splits


# ---------------------------------------------------------------------------
# Named dataset registry

#: Benchmark tables: the file schema is a header CSV whose trailing 'label'
#: column is already binary (see data/README.md for the UCI conversions).
REGISTRY = {
    "synthetic": {"source": "generated"},
    "iris": {"file": "iris.csv", "scaling": "standardize"},
    "wine": {"file": "wine.csv", "scaling": "standardize"},
    "cancer": {"file": "cancer.csv", "scaling": "standardize"},
    "glass": {"file": "glass.csv", "scaling": "standardize"},
    "heart": {
        "file": "heart.csv",
        "scaling": "standardize",
        "encoding": "onehot",
        "categorical": ("cp", "restecg", "slope", "thal", "sex", "fbs", "exang"),
    },
    "hepatitis": {
        "file": "hepatitis.csv",
        "scaling": "minmax",
        "imputation": "median",
        "encoding": "label",
        "categorical": (
            "sex", "steroid", "antivirals", "fatigue", "malaise", "anorexia",
            "liver_big", "liver_firm", "spleen_palpable", "spiders", "ascites",
            "varices", "histology",
        ),
    },
    "australian": {"file": "australian.csv", "scaling": "standardize", "encoding": "label"},
    "banknote": {"file": "banknote.csv", "scaling": "standardize"},
}

_UU_DEFAULTS = {"k": 100, "n_flip": 10, "flip_weight": 25.0}


def default_data_dir():
    env = os.environ.get("XGL_DATA_DIR")
    if env:
        return Path(env)
    repo = Path(__file__).resolve().parents[2] / "data"
    return repo if repo.is_dir() else Path.cwd() / "data"


def default_model_spec(name):
    from .learners import ModelSpec

    base = name.removesuffix("+uu")
    if base == "synthetic":
        return ModelSpec("rbf_svm", {"gamma": 100.0, "C": 100.0})
    if base in ("banknote", "cancer"):
        return ModelSpec("rbf_svm", {"gamma": 0.01, "C": 100.0})
    return ModelSpec("gradient_boosted_trees")


def build_dataset(name, seed, data_dir=None, uu_params=None):
    """Materialize a registry dataset; names ending in '+uu' get injected
    unknown unknowns (k-means label flips with raised weights)."""
    base = name.removesuffix("+uu")
    wants_uu = name.endswith("+uu")
    if base not in REGISTRY:
        raise KeyError(f"unknown dataset {base!r}; registered: {sorted(REGISTRY)}")
    entry = REGISTRY[base]
    if entry.get("source") == "generated":
        d = generate_synthetic(seed=child_seed(seed, 100))
    else:
        directory = Path(data_dir) if data_dir is not None else default_data_dir()
        path = directory / entry["file"]
        if not path.is_file():
            raise FileNotFoundError(
                f"dataset file {path} not found; place the converted CSV there "
                f"(see data/README.md for the expected schema)"
            )
        spec = PreprocessSpec(
            encoding=entry.get("encoding", "onehot"),
            scaling=entry.get("scaling", "standardize"),
            imputation=entry.get("imputation", "median"),
            subsample_fraction=entry.get("subsample_fraction"),
            feature_selection=entry.get("feature_selection"),
            categorical=entry.get("categorical", ()),
            label_column="label",
            positive_label=1,
        )
        d = load_and_preprocess(path, spec, seed=child_seed(seed, 101))
    if wants_uu:
        params = dict(_UU_DEFAULTS)
        params.update(uu_params or {})
        k = min(params["k"], d.n_rows)
        d = inject_uu(
            d,
            k=k,
            n_flip=params["n_flip"],
            flip_weight=params["flip_weight"],
            seed=child_seed(seed, 102),
        )
    return d
