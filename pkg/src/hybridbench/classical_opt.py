"""Classical MaxCut baselines: exhaustive search, 1-flip descent, simulated annealing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maxcut import WeightedGraph, cut_energy, maxcut_energy

BRUTE_FORCE_MAX_NODES = 24


@dataclass(frozen=True)
class AnnealSchedule:
    t_initial: float = 2.0
    t_final: float = 0.01
    sweeps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.t_initial > 0:
            raise ValueError("initial temperature must be positive")
        if not 0 < self.t_final < self.t_initial:
            raise ValueError("final temperature must lie in (0, t_initial)")
        if self.sweeps < 1:
            raise ValueError("need at least one sweep")


def _bits(codes: np.ndarray, n: int) -> np.ndarray:
    # most significant bit -> node 0, so increasing code == lexicographic order
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)


def brute_force_qubo(graph: WeightedGraph, chunk: int = 1 << 16) -> tuple[np.ndarray, float]:
    """Global minimum by enumeration; lexicographically smallest among ties."""
    n = graph.num_nodes
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"exhaustive search limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    total = 1 << n
    scale = max(1.0, float(np.abs(graph.weights).sum()))
    tol = 1e-12 * scale
    best_e, best_code = np.inf, 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        e = cut_energy(graph, _bits(codes, n).astype(float))
        k = int(np.argmin(e))
        if e[k] < best_e - tol:
            # earliest code within tolerance of the chunk minimum
            k = int(np.flatnonzero(e <= e[k] + tol)[0])
            best_e, best_code = float(e[k]), int(codes[k])
    x = _bits(np.array([best_code]), n)[0].astype(int)
    return x, maxcut_energy(graph, x)


def flip_deltas(graph: WeightedGraph, x: np.ndarray) -> np.ndarray:
    """Energy change for flipping each bit: ``sum_j d_ij (2 cut_ij - 1)``."""
    s = 1.0 - 2.0 * x  # +1 for 0, -1 for 1
    # cut_ij = (1 - s_i s_j)/2  ->  2 cut_ij - 1 = -s_i s_j
    return -s * (graph.weights @ s)


def is_one_flip_optimal(graph: WeightedGraph, x, tol: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    e0 = maxcut_energy(graph, x)
    for i in range(graph.num_nodes):
        y = x.copy()
        y[i] = 1.0 - y[i]
        if maxcut_energy(graph, y) < e0 - tol:
            return False
    return True


def local_search_1flip(graph: WeightedGraph, start, max_flips: int | None = None) -> tuple[np.ndarray, float]:
    """Best-improvement single-bit descent until no flip lowers the energy."""
    x = np.array(start, dtype=float)
    if x.shape != (graph.num_nodes,) or not np.all((x == 0) | (x == 1)):
        raise ValueError("start must be a 0/1 vector with one entry per node")
    w = graph.weights
    s = 1.0 - 2.0 * x
    field_ = w @ s
    tol = 1e-12 * max(1.0, float(w.max(initial=0.0)))
    flips = 0
    limit = max_flips if max_flips is not None else 10 * graph.num_nodes**2 + 10
    while flips < limit:
        delta = -s * field_
        i = int(np.argmin(delta))
        if delta[i] >= -tol:
            break
        s[i] = -s[i]
        field_ += 2.0 * s[i] * w[:, i]
        flips += 1
    x = (1.0 - s) / 2.0
    x = x.round().astype(int)
    return x, maxcut_energy(graph, x)


def simulated_annealing(graph: WeightedGraph, schedule: AnnealSchedule, start=None,
                        return_trace: bool = False):
    """Metropolis single-flip chain with geometric cooling; returns the best state seen.

    One sweep visits every node once in a random order.  With
    ``return_trace`` the best-seen energy after each sweep is returned too.
    """
    n = graph.num_nodes
    rng = np.random.default_rng(schedule.seed)
    w = graph.weights
    if start is None:
        x = rng.integers(0, 2, size=n).astype(float)
    else:
        x = np.array(start, dtype=float)
    s = 1.0 - 2.0 * x
    field_ = w @ s
    energy = maxcut_energy(graph, x)
    best_s, best_e = s.copy(), energy
    ratio = (schedule.t_final / schedule.t_initial) ** (1.0 / max(1, schedule.sweeps - 1))
    temp = schedule.t_initial
    trace = []
    for _ in range(schedule.sweeps):
        order = rng.permutation(n)
        uniforms = rng.random(n)
        for i, u in zip(order.tolist(), uniforms.tolist()):
            d = -s[i] * field_[i]
            if d <= 0.0 or u < np.exp(-d / temp):
                s[i] = -s[i]
                field_ += 2.0 * s[i] * w[:, i]
                energy += d
                if energy < best_e:
                    best_e, best_s = energy, s.copy()
        trace.append(best_e)
        temp *= ratio
    x_best = ((1.0 - best_s) / 2.0).round().astype(int)
    result = (x_best, maxcut_energy(graph, x_best))
    if return_trace:
        return result + (np.array(trace),)
    return result
