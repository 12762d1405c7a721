"""Built-in synthetic dataset: Gaussian normals, anomalies shifted on two coordinates."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import save_csv


def make_synthetic(seed: int = 0, n_normal: int = 2000, n_test_normal: int = 900, n_test_anomaly: int = 100,
                   m: int = 6, shift: float = 4.0):
    """Return (train_X, test_X, test_y); train rows are all normal."""
    if min(n_normal, n_test_normal, n_test_anomaly) < 1 or m < 2:
        raise ValueError("all counts must be >= 1 and m >= 2")
    rng = np.random.default_rng(seed)
    train = rng.standard_normal((n_normal, m))
    test_normal = rng.standard_normal((n_test_normal, m))
    anomalies = rng.standard_normal((n_test_anomaly, m))
    for row in anomalies:
        cols = rng.choice(m, size=2, replace=False)
        row[cols] += shift * rng.choice([-1.0, 1.0], size=2)
    test = np.vstack([test_normal, anomalies])
    labels = np.r_[np.zeros(n_test_normal, dtype=int), np.ones(n_test_anomaly, dtype=int)]
    perm = rng.permutation(len(test))
    return train, test[perm], labels[perm]


def write_synthetic(out_dir, seed: int = 0, **kwargs) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test, labels = make_synthetic(seed, **kwargs)
    names = [f"f{j}" for j in range(train.shape[1])]
    train_path, test_path = out_dir / "train.csv", out_dir / "test.csv"
    save_csv(train_path, train, names, labels=np.zeros(len(train), dtype=int))
    save_csv(test_path, test, names, labels=labels)
    return train_path, test_path
