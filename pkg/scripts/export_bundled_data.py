#!/usr/bin/env python3
"""Materialize the three sklearn-bundled benchmark tables as raw CSVs.

Run once to (re)create data/iris.csv, data/wine.csv, data/cancer.csv; the
package itself never imports sklearn. Binarizations follow the benchmark
registry: iris positive = setosa (50/100), wine positive = cultivar class_2
(48/130), cancer positive = malignant (212/357).
"""

from pathlib import Path

import pandas as pd
from sklearn.datasets import load_breast_cancer, load_iris, load_wine

OUT = Path(__file__).resolve().parents[1] / "data"


def export(bunch, positive_classes, path, flip=False):
    frame = pd.DataFrame(bunch.data, columns=[c.replace(" ", "_") for c in bunch.feature_names])
    label = pd.Series(bunch.target).isin(positive_classes).astype(int)
    frame["label"] = (1 - label) if flip else label
    frame.to_csv(path, index=False)
    print(f"{path}: {len(frame)} rows, {frame['label'].sum()} positive")


def main():
    OUT.mkdir(exist_ok=True)
    export(load_iris(), {0}, OUT / "iris.csv")  # class 0 = setosa
    export(load_wine(), {2}, OUT / "wine.csv")  # class 2 = third cultivar
    export(load_breast_cancer(), {0}, OUT / "cancer.csv")  # target 0 = malignant


if __name__ == "__main__":
    main()
