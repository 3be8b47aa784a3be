"""Datasets for the classification and regression experiments."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NORMALIZATIONS = ("minmax", "zscore", "none")


class DatasetError(ValueError):
    """Bad dataset file, column or value."""


@dataclass(frozen=True)
class Scaler:
    """Per-column affine map ``(v - shift) / scale``; ``scale`` 0 means a constant column."""

    kind: str
    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray, kind: str = "minmax") -> "Scaler":
        values = np.asarray(values, dtype=float)
        if kind not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if kind == "minmax":
            lo = values.min(axis=0)
            return cls(kind, lo, values.max(axis=0) - lo)
        if kind == "zscore":
            return cls(kind, values.mean(axis=0), values.std(axis=0))
        ncol = values.shape[1] if values.ndim > 1 else 1
        return cls(kind, np.zeros(ncol), np.ones(ncol))

    def transform(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        # constant columns collapse to 0
        return np.where(self.scale > 0, (values - self.shift) / safe, 0.0)

    def inverse(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.scale + self.shift

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shift": self.shift.tolist(), "scale": self.scale.tolist()}


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()
    target_name: str = "y"
    scalers: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DatasetError(f"features {X.shape} and targets {y.shape} do not line up")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names, self.target_name, self.scalers)


def make_circles(n: int = 1000, noise: float = 0.1, factor: float = 0.5, seed: int = 0,
                 normalize: bool = True) -> Dataset:
    """Two concentric noisy circles; outer ring is label 0, inner ring label 1.

    With ``normalize`` the features are min-max scaled to ``[0, 1]`` over the
    whole sample.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be a positive even number")
    if not 0 < factor < 1:
        raise ValueError("factor must lie in (0, 1)")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    half = n // 2
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    radius = np.concatenate([np.ones(half), np.full(half, factor)])
    X = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
    X += rng.normal(0.0, noise, size=X.shape)
    y = np.concatenate([np.zeros(half), np.ones(half)])
    order = rng.permutation(n)
    X, y = X[order], y[order]
    scalers = {}
    if normalize:
        scalers["features"] = Scaler.fit(X, "minmax")
        X = scalers["features"].transform(X)
    return Dataset(X, y, ("x0", "x1"), "label", scalers)


def make_housing_like(n: int = 506, seed: int = 0, normalize: bool = True) -> Dataset:
    """Synthetic stand-in for the rooms/LSTAT -> price regression task.

    Rooms are roughly normal around 6.3, the lower-status share is skewed
    in [2, 38], and the price rises with rooms and falls convexly with the
    lower-status share, plus noise.
    """
    rng = np.random.default_rng(seed)
    rooms = np.clip(rng.normal(6.3, 0.7, n), 3.5, 8.8)
    lstat = np.clip(rng.lognormal(np.log(11.0), 0.5, n), 1.7, 38.0)
    price = 24.0 + 7.5 * (rooms - 6.3) - 1.1 * (lstat - 12.0) + 0.03 * (lstat - 12.0) ** 2
    price = np.clip(price + rng.normal(0.0, 3.0, n), 5.0, 50.0)
    X = np.column_stack([rooms, lstat])
    y = price / 100.0  # hundreds of thousands, like price / 1e5
    return _normalized(X, y, ("rooms", "lstat"), "price", "minmax" if normalize else "none")


def _normalized(X, y, names, target, kind) -> Dataset:
    fs = Scaler.fit(X, kind)
    ts = Scaler.fit(y[:, None], kind)
    return Dataset(fs.transform(X), ts.transform(y[:, None])[:, 0], tuple(names), target,
                   {"features": fs, "target": ts})


def load_csv_dataset(path, features, target: str, normalization: str = "minmax",
                     normalize_target: bool = True) -> Dataset:
    """Read ``features`` and ``target`` columns from a CSV with a header row."""
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    features = [features] if isinstance(features, str) else list(features)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path} is empty") from None
        for col in features + [target]:
            if col not in header:
                raise DatasetError(f"column {col!r} not found in {path}")
        cols = [header.index(c) for c in features + [target]]
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(row[c]) for c in cols])
            except (ValueError, IndexError):
                raise DatasetError(f"non-numeric or missing value in data row {lineno} of {path}") from None
    if not rows:
        raise DatasetError(f"{path} has no data rows")
    data = np.array(rows)
    X, y = data[:, :-1], data[:, -1]
    fs = Scaler.fit(X, normalization)
    ts = Scaler.fit(y[:, None], normalization if normalize_target else "none")
    return Dataset(fs.transform(X), ts.transform(y[:, None])[:, 0], tuple(features), target,
                   {"features": fs, "target": ts})


def split_dataset(ds: Dataset, train_fraction: float = 0.8, seed: int = 0,
                  train_size: int | None = None) -> tuple[Dataset, Dataset]:
    """Shuffle and split; ``train_size`` takes that many of the training share.

    The held-out part is always the last ``1 - train_fraction`` share of the
    shuffled rows, so sweeping ``train_size`` keeps one common test set.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = len(ds)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    train_idx, test_idx = order[:n_train], order[n_train:]
    if train_size is not None:
        if not 1 <= train_size <= n_train:
            raise ValueError(f"train_size must be in [1, {n_train}]")
        train_idx = train_idx[:train_size]
    return ds.subset(train_idx), ds.subset(test_idx)

