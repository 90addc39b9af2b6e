#!/usr/bin/env python3
"""Regenerate data/breast_cancer.csv from scikit-learn's bundled copy of the
Wisconsin diagnostic breast cancer dataset (569 rows, 30 features).

Labels: M (malignant) / B (benign). Feature values are written with repr()
so they parse back to the exact same float64.
"""

import os

from sklearn.datasets import load_breast_cancer


def main() -> None:
    data = load_breast_cancer()
    out_path = os.path.join(os.path.dirname(__file__), "..", "data", "breast_cancer.csv")
    os.makedirs(os.path.dirname(out_path), exist_ok=True)
    names = [n.replace(" ", "_") for n in data.feature_names]
    with open(out_path, "w") as f:
        f.write("label," + ",".join(names) + "\n")
        for row, target in zip(data.data, data.target):
            # sklearn: target 0 = malignant, 1 = benign
            label = "B" if target == 1 else "M"
            f.write(label + "," + ",".join(repr(float(v)) for v in row) + "\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
