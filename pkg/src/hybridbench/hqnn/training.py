"""Training loop, metrics and repeated-run sweeps."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from ..optim import AdamState, adam_update
from .datasets import Dataset, split_dataset
from .network import Network, build_network, loss_and_grad, loss_value

LOSSES = ("bce", "mse")
METRICS = ("accuracy", "mae", "mse", "bce")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 100
    batch_size: int | None = None  # None: full batch
    loss: str = "bce"
    metric: str = "accuracy"
    seed: int = 0
    train_fraction: float = 0.3
    test_fraction: float = 0.7

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if not 0 < self.train_fraction < 1 or abs(self.train_fraction + self.test_fraction - 1) > 1e-9:
            raise ValueError("train and test fractions must be in (0, 1) and sum to 1")

    @classmethod
    def classification(cls, **kw) -> "TrainConfig":
        return cls(**{"learning_rate": 1e-2, "loss": "bce", "metric": "accuracy",
                      "train_fraction": 0.3, "test_fraction": 0.7, **kw})

    @classmethod
    def regression(cls, **kw) -> "TrainConfig":
        return cls(**{"learning_rate": 3e-3, "loss": "mse", "metric": "mae",
                      "train_fraction": 0.8, "test_fraction": 0.2, **kw})


@dataclass
class History:
    train_loss: list[float]
    test_metric: list[float]

    def rows(self):
        return [{"epoch": i + 1, "train_loss": a, "test_metric": b}
                for i, (a, b) in enumerate(zip(self.train_loss, self.test_metric))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "test_metric"])
            w.writeheader()
            w.writerows(self.rows())


def evaluate_metrics(net: Network, dataset: Dataset, metric: str) -> float:
    """Accuracy (threshold 0.5), MSE, MAE or BCE of ``net`` on ``dataset``."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if metric in ("accuracy", "bce") and net.task != "classification":
        raise ValueError(f"{metric} is a classification metric")
    if metric == "bce":
        return loss_value(net, dataset.X, dataset.y, "bce")
    pred = net.forward(dataset.X)
    if metric == "accuracy":
        return float(np.mean((pred > 0.5) == (dataset.y > 0.5)))
    if metric == "mse":
        return float(np.mean((pred - dataset.y) ** 2))
    return float(np.mean(np.abs(pred - dataset.y)))


def train(net: Network, dataset, config: TrainConfig) -> tuple[Network, History]:
    """Adam on ``config.loss``; ``dataset`` is a Dataset (split per config) or a (train, test) pair.

    The epoch-``k`` entries of the history are the full training loss and the
    test metric after the ``k``-th pass over the data.
    """
    if isinstance(dataset, Dataset):
        train_set, test_set = split_dataset(dataset, config.train_fraction, config.seed)
    else:
        train_set, test_set = dataset
    if train_set.X.shape[1] < net.in_dim:
        raise ValueError(f"network needs {net.in_dim} features, data has {train_set.X.shape[1]}")
    rng = np.random.default_rng([config.seed, 7])
    params = net.get_flat()
    adam = AdamState.create(params.size, lr=config.learning_rate)
    n = len(train_set)
    batch = n if config.batch_size is None else min(config.batch_size, n)
    history = History([], [])
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            loss, grad = loss_and_grad(net, train_set.X[idx], train_set.y[idx], config.loss)
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingError(f"non-finite loss or gradient in epoch {epoch} (loss={loss})")
            adam, params = adam_update(adam, params, grad)
            net.set_flat(params)
        history.train_loss.append(loss_value(net, train_set.X, train_set.y, config.loss))
        history.test_metric.append(evaluate_metrics(net, test_set, config.metric))
    return net, history


@dataclass
class RunSummary:
    model: str
    train_size: int
    repeats: int
    per_repeat: list[float]
    mean: float
    stddev: float
    extra: dict

    def to_dict(self) -> dict:
        return asdict(self)


def repeated_runs(dataset: Dataset, task: str, model: str, config: TrainConfig, repeats: int = 10,
                  train_size: int | None = None, seed: int = 0, extra_metrics=(),
                  on_history=None) -> RunSummary:
    """Train ``repeats`` independently seeded models and summarize the final test metric.

    Repeat ``r`` uses seed ``seed + r`` for initialization, data split and shuffling.
    """
    finals, extras = [], {m: [] for m in extra_metrics}
    size = None
    for r in range(repeats):
        s = seed + r
        cfg = TrainConfig(**{**asdict(config), "seed": s})
        tr, te = split_dataset(dataset, cfg.train_fraction, s, train_size)
        size = len(tr)
        net = build_network(task, model, s)
        net, hist = train(net, (tr, te), cfg)
        if on_history is not None:
            on_history(r, s, hist)
        finals.append(hist.test_metric[-1])
        for m in extra_metrics:
            extras[m].append(evaluate_metrics(net, te, m))
    arr = np.array(finals)
    extra = {m: {"per_repeat": v, "mean": float(np.mean(v))} for m, v in extras.items()}
    return RunSummary(model, size, repeats, finals, float(arr.mean()), float(arr.std()), extra)


def train_size_sweep(dataset: Dataset, task: str, model: str, config: TrainConfig, sizes,
                     repeats: int = 10, seed: int = 0) -> list[RunSummary]:
    """Averaged final test metric for each training-set size, in increasing size order."""
    return [repeated_runs(dataset, task, model, config, repeats, size, seed)
            for size in sorted(set(int(s) for s in sizes))]
