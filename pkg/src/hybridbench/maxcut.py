"""Weighted MaxCut instances, their QUBO form, and result records.

Energies use the single-counted convention

    E(x) = -sum_{i<j} d_ij (x_i - x_j)**2

which is minus the cut weight and equals ``x^T Q x`` for the upper
triangular QUBO matrix built by :func:`graph_to_qubo`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class WeightedGraph:
    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("graph needs at least one node")
        w = np.zeros((self.num_nodes, self.num_nodes))
        norm_edges = []
        for i, j, d in self.edges:
            i, j, d = int(i), int(j), float(d)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < self.num_nodes):
                raise ValueError(f"edge ({i}, {j}) out of range")
            if w[i, j] != 0.0:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(d) or d <= 0:
                raise ValueError(f"edge ({i}, {j}) has non-positive weight {d}")
            w[i, j] = w[j, i] = d
            norm_edges.append((i, j, d))
        w.setflags(write=False)
        object.__setattr__(self, "edges", tuple(norm_edges))
        object.__setattr__(self, "weights", w)

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @classmethod
    def from_matrix(cls, w) -> "WeightedGraph":
        w = np.asarray(w, dtype=float)
        n = w.shape[0]
        iu, ju = np.triu_indices(n, k=1)
        mask = w[iu, ju] != 0
        return cls(n, tuple(zip(iu[mask].tolist(), ju[mask].tolist(), w[iu, ju][mask].tolist())))


def random_weighted_graph(n: int, seed: int, low: float = 0.01, high: float = 1.0) -> WeightedGraph:
    """Complete graph with i.i.d. uniform edge weights in ``[low, high]``."""
    if n < 2:
        raise ValueError("need at least two nodes")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    d = rng.uniform(low, high, size=iu.size)
    return WeightedGraph(n, tuple(zip(iu.tolist(), ju.tolist(), d.tolist())))


def _check_assignment(graph: WeightedGraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != graph.num_nodes:
        raise ValueError(f"assignment length {x.shape[-1]} != {graph.num_nodes} nodes")
    return x


def cut_energy(graph: WeightedGraph, x) -> np.ndarray | float:
    """``-sum_{i<j} d_ij (x_i - x_j)^2``; accepts continuous values and leading batch axes."""
    x = _check_assignment(graph, x)
    w = graph.weights
    quad = ((x @ w) * x).sum(axis=-1)
    e = -(x * x) @ graph.degrees + quad
    return float(e) if np.ndim(e) == 0 else e


def maxcut_energy(graph: WeightedGraph, x) -> float:
    x = _check_assignment(graph, x)
    if x.ndim != 1 or not np.all((x == 0) | (x == 1)):
        raise ValueError("assignment must be a 0/1 vector")
    return cut_energy(graph, x)


def graph_to_qubo(graph: WeightedGraph) -> np.ndarray:
    """Upper-triangular Q with ``Q_ij = 2 d_ij`` (i < j) and ``Q_ii = -sum_j d_ij``."""
    q = 2.0 * np.triu(graph.weights, k=1)
    q[np.diag_indices(graph.num_nodes)] = -graph.degrees
    return q


def qubo_energy(q: np.ndarray, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ q @ x)


def read_graph(path) -> WeightedGraph:
    """Read ``n m`` followed by ``m`` lines of ``i j w`` (0-based)."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise ValueError(f"{path}: first line must be 'n m'")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"{path}: header announces {m} edges, found {len(body)}")
    edges = []
    for lineno, parts in enumerate(body, start=2):
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'i j w'")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return WeightedGraph(n, tuple(edges))


def write_graph(graph: WeightedGraph, path) -> None:
    rows = [f"{graph.num_nodes} {len(graph.edges)}"]
    rows += [f"{i} {j} {d!r}" for i, j, d in graph.edges]
    Path(path).write_text("\n".join(rows) + "\n")


@dataclass
class OptResult:
    best_x: np.ndarray
    best_energy: float
    trace: list[dict] = field(default_factory=list)
    # solver-specific extras (final angles, candidate pool, ...); not serialized
    extra: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "best_energy": float(self.best_energy),
            "best_x": [int(b) for b in self.best_x],
            "trace": self.trace,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "OptResult":
        return cls(np.array(data["best_x"], dtype=int), float(data["best_energy"]), list(data["trace"]))
