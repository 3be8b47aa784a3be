"""Amplitude-encoded variational MaxCut solver (QuEnc).

Layout: qubit 0 is a value ancilla, qubits ``1..m`` address the ``n_c``
nodes with ``m = ceil(log2 n_c)``.  Basis index ``k = ancilla + 2 * address``.
Node ``i`` is read out through the conditional probability

    p_i = |a(i, 1)|^2 / (|a(i, 0)|^2 + |a(i, 1)|^2)

which turns the discrete MaxCut over ``n_c`` bits into a smooth cost in
``(m + 1) * layers`` circuit angles.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .classical_opt import AnnealSchedule, local_search_1flip, simulated_annealing
from .maxcut import OptResult, WeightedGraph, cut_energy, maxcut_energy
from .optim import AdamState, adam_update, finite_diff_grad
from .statevector import AnsatzSpec, StateVector, run_circuit_batch

DEGENERATE_THRESHOLD = 1e-12
GRADIENT_MODES = ("parameter-shift", "finite-difference")
ENTANGLERS = ("chain", "ring", "full")


@dataclass(frozen=True)
class QuencConfig:
    layers: int = 4
    learning_rate: float = 0.05
    max_iter: int = 2000
    gradient: str = "parameter-shift"
    seed: int = 0
    tol: float = 1e-9
    patience: int = 50
    fd_step: float = 1e-5
    entangler: str = "chain"
    init_scale: float | None = None
    # perturb the angles when the best decoded energy has not improved for
    # ``kick_patience`` iterations (0 disables)
    kick_patience: int = 25
    kick_scale: float = 0.5
    pool_size: int = 8

    def __post_init__(self):
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.gradient not in GRADIENT_MODES:
            raise ValueError(f"gradient must be one of {GRADIENT_MODES}")
        if self.kick_patience < 0 or self.kick_scale < 0:
            raise ValueError("kick settings must be non-negative")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")


@dataclass(frozen=True)
class RefineConfig:
    method: str = "local"  # "local" or "anneal"
    anneal: AnnealSchedule = AnnealSchedule(t_initial=0.5, t_final=0.005, sweeps=200)
    candidates: int = 8  # how many of QuEnc's best distinct cuts to refine

    def __post_init__(self):
        if self.method not in ("local", "anneal"):
            raise ValueError("refine method must be 'local' or 'anneal'")
        if self.candidates < 1:
            raise ValueError("candidates must be >= 1")


class _CandidatePool:
    """The ``size`` lowest-energy distinct assignments seen so far."""

    def __init__(self, size: int):
        self.size = size
        self._items: dict[bytes, tuple[float, np.ndarray]] = {}

    def add(self, x: np.ndarray, energy: float) -> None:
        key = x.tobytes()
        if key in self._items:
            return
        if len(self._items) < self.size:
            self._items[key] = (energy, x)
            return
        worst = max(self._items, key=lambda k: self._items[k][0])
        if energy < self._items[worst][0]:
            del self._items[worst]
            self._items[key] = (energy, x)

    def sorted(self) -> list[tuple[float, np.ndarray]]:
        return sorted(self._items.values(), key=lambda t: t[0])


def address_qubits(n_c: int) -> int:
    return max(1, math.ceil(math.log2(n_c)))


def entangling_pattern(num_qubits: int, kind: str) -> tuple[tuple[int, int], ...]:
    chain = tuple((q, q + 1) for q in range(num_qubits - 1))
    if kind == "chain":
        return chain
    if kind == "ring":
        return chain + (((num_qubits - 1, 0),) if num_qubits > 2 else ())
    if kind == "full":
        return tuple((c, t) for c in range(num_qubits) for t in range(num_qubits) if c < t)
    raise ValueError(f"unknown entangler {kind!r}")


def build_ansatz(n_c: int, layers: int, entangler: str = "chain") -> AnsatzSpec:
    if n_c < 2:
        raise ValueError("need at least two nodes")
    n = address_qubits(n_c) + 1
    return AnsatzSpec(num_qubits=n, layers=layers, entangler=entangling_pattern(n, entangler),
                      rotation="RY", hadamard_wall=True)


def _joint_probs(amplitudes: np.ndarray, n_c: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (P(address=i, ancilla=1), P(address=i)) for the first ``n_c`` addresses."""
    probs = amplitudes.real**2 + amplitudes.imag**2
    pairs = probs.reshape(probs.shape[:-1] + (-1, 2))[..., :n_c, :]
    return pairs[..., 1], pairs.sum(axis=-1)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    ok = den >= DEGENERATE_THRESHOLD
    return np.where(ok, num / np.where(ok, den, 1.0), 0.5)


def conditional_probabilities(state: StateVector, n_c: int) -> np.ndarray:
    if state.num_qubits != address_qubits(n_c) + 1:
        raise ValueError(
            f"state has {state.num_qubits} qubits, encoding {n_c} nodes needs {address_qubits(n_c) + 1}"
        )
    num, den = _joint_probs(state.amplitudes, n_c)
    return np.clip(_ratio(num, den), 0.0, 1.0)


def relaxed_cost(graph: WeightedGraph, p) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("relaxed assignment must lie in [0, 1]")
    return cut_energy(graph, p)


def decode_solution(p) -> np.ndarray:
    return (np.asarray(p) > 0.5).astype(int)


def _cost_grad_wrt_p(graph: WeightedGraph, p: np.ndarray) -> np.ndarray:
    # d/dp_i of -sum_{i<j} d_ij (p_i - p_j)^2
    return -2.0 * (graph.degrees * p - graph.weights @ p)


def _shift_batch(params: np.ndarray) -> np.ndarray:
    k = params.size
    shifts = np.eye(k) * (np.pi / 2)
    return np.vstack([params[None, :], params + shifts, params - shifts])


def _evaluate(graph: WeightedGraph, ansatz: AnsatzSpec, params: np.ndarray, mode: str, fd_step: float = 1e-5):
    """Return (p, cost, gradient) at ``params``."""
    n_c = graph.num_nodes
    k = params.size
    if mode == "parameter-shift":
        amps = run_circuit_batch(ansatz, _shift_batch(params))
        num, den = _joint_probs(amps, n_c)
        p = _ratio(num[0], den[0])
        # both joint probabilities are projector expectations -> exact shift rule,
        # then the quotient rule for p = num / den
        d_num = (num[1:k + 1] - num[k + 1:]) / 2.0
        d_den = (den[1:k + 1] - den[k + 1:]) / 2.0
        ok = den[0] >= DEGENERATE_THRESHOLD
        safe = np.where(ok, den[0], 1.0)
        dp = np.where(ok, (d_num * den[0] - num[0] * d_den) / safe**2, 0.0)
        grad = dp @ _cost_grad_wrt_p(graph, p)
    elif mode == "finite-difference":
        def f(theta):
            n, d = _joint_probs(run_circuit_batch(ansatz, theta)[0], n_c)
            return cut_energy(graph, _ratio(n, d))

        n, d = _joint_probs(run_circuit_batch(ansatz, params)[0], n_c)
        p = _ratio(n, d)
        grad = finite_diff_grad(f, params, fd_step)
    else:
        raise ValueError(f"unknown gradient mode {mode!r}")
    return p, cut_energy(graph, p), grad


def quenc_gradient(graph: WeightedGraph, ansatz: AnsatzSpec, params, mode: str = "parameter-shift",
                   h: float = 1e-5) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (ansatz.num_params,):
        raise ValueError(f"expected {ansatz.num_params} parameters, got shape {params.shape}")
    return _evaluate(graph, ansatz, params, mode, h)[2]


def quenc_cost(graph: WeightedGraph, ansatz: AnsatzSpec, params) -> float:
    num, den = _joint_probs(run_circuit_batch(ansatz, params)[0], graph.num_nodes)
    return cut_energy(graph, _ratio(num, den))


def init_params(ansatz: AnsatzSpec, seed: int, scale: float | None = None) -> np.ndarray:
    """Uniform angles in [0, 2 pi) or, with ``scale``, normal angles around zero."""
    rng = np.random.default_rng(seed)
    if scale is None:
        return rng.uniform(0.0, 2.0 * np.pi, size=ansatz.num_params)
    return rng.normal(0.0, scale, size=ansatz.num_params)


def quenc_optimize(graph: WeightedGraph, config: QuencConfig = QuencConfig(),
                   params0=None) -> OptResult:
    """Adam on the relaxed cost; each iterate is decoded and the best cut kept.

    Every binary ``p`` is a stationary point of the angle landscape, so plain
    descent tends to park on a vertex.  When the best decoded energy stalls for
    ``kick_patience`` iterations the angles get a Gaussian kick and Adam's
    moments are reset.  The ``pool_size`` best distinct cuts end up in
    ``result.extra["candidates"]``.
    """
    ansatz = build_ansatz(graph.num_nodes, config.layers, config.entangler)
    params = init_params(ansatz, config.seed, config.init_scale) if params0 is None else np.array(params0, dtype=float)
    kick_rng = np.random.default_rng([config.seed, 1])
    adam = AdamState.create(ansatz.num_params, lr=config.learning_rate)
    pool = _CandidatePool(config.pool_size)
    best_x, best_e = None, np.inf
    trace = []
    prev_cost, calm, stale, kicks = None, 0, 0, 0
    t0 = time.perf_counter()
    for it in range(config.max_iter):
        p, cost, grad = _evaluate(graph, ansatz, params, config.gradient, config.fd_step)
        if not np.isfinite(cost):
            raise FloatingPointError(f"non-finite cost at iteration {it}")
        x = decode_solution(p)
        energy = maxcut_energy(graph, x)
        pool.add(x, energy)
        if energy < best_e - 1e-12:
            best_x, best_e, stale = x, energy, 0
        else:
            stale += 1
        trace.append({
            "iter": it,
            "cost": float(cost),
            "energy": float(energy),
            "best_energy": float(best_e),
            "elapsed_ms": (time.perf_counter() - t0) * 1e3,
        })
        if prev_cost is not None and abs(cost - prev_cost) < config.tol:
            calm += 1
            if calm >= config.patience:
                break
        else:
            calm = 0
        prev_cost = cost
        adam, params = adam_update(adam, params, grad)
        if config.kick_patience and stale >= config.kick_patience:
            params = params + kick_rng.normal(0.0, config.kick_scale, params.size)
            adam = AdamState.create(ansatz.num_params, lr=config.learning_rate)
            stale, calm, prev_cost = 0, 0, None
            kicks += 1
    return OptResult(best_x, best_e, trace,
                     extra={"params": params, "candidates": pool.sorted(), "kicks": kicks})


def hybrid_pipeline(graph: WeightedGraph, quenc_config: QuencConfig = QuencConfig(),
                    refine_config: RefineConfig = RefineConfig()) -> OptResult:
    """QuEnc presolve, then classical refinement warm-started from its best cuts."""
    first = quenc_optimize(graph, quenc_config)
    t0 = time.perf_counter()
    x, e = first.best_x, first.best_energy
    for _, start in first.extra["candidates"][: refine_config.candidates]:
        if refine_config.method == "local":
            cx, ce = local_search_1flip(graph, start)
        else:
            cx, ce = simulated_annealing(graph, refine_config.anneal, start=start)
            cx, ce = local_search_1flip(graph, cx)
        if ce < e:
            x, e = cx, ce
    last_ms = first.trace[-1]["elapsed_ms"] if first.trace else 0.0
    trace = list(first.trace)
    trace.append({
        "iter": len(trace),
        "cost": float(e),
        "energy": float(e),
        "best_energy": float(e),
        "elapsed_ms": last_ms + (time.perf_counter() - t0) * 1e3,
        "stage": "refine",
    })
    return OptResult(np.asarray(x, dtype=int), float(e), trace,
                     extra={"quenc_energy": first.best_energy, "quenc": first})


class QuEncMaxCut(ClusterMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` takes a symmetric weight matrix (or a graph).

    After fitting, ``labels_`` holds the 0/1 side of each node,
    ``energy_`` the cut energy and ``trace_`` the per-iteration record.
    """

    def __init__(self, layers=4, learning_rate=0.05, max_iter=2000, gradient="parameter-shift",
                 tol=1e-9, patience=50, kick_patience=25, kick_scale=0.5, refine=None, random_state=0):
        self.layers = layers
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.gradient = gradient
        self.tol = tol
        self.patience = patience
        self.kick_patience = kick_patience
        self.kick_scale = kick_scale
        self.refine = refine
        self.random_state = random_state

    def _graph(self, X) -> WeightedGraph:
        if isinstance(X, WeightedGraph):
            return X
        w = check_array(X, ensure_min_samples=2, ensure_min_features=2)
        if w.shape[0] != w.shape[1] or not np.allclose(w, w.T):
            raise ValueError("weight matrix must be square and symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weight matrix must have a zero diagonal")
        return WeightedGraph.from_matrix(w)

    def fit(self, X, y=None):
        graph = self._graph(X)
        config = QuencConfig(layers=self.layers, learning_rate=self.learning_rate,
                             max_iter=self.max_iter, gradient=self.gradient, seed=self.random_state,
                             tol=self.tol, patience=self.patience, kick_patience=self.kick_patience,
                             kick_scale=self.kick_scale)
        if self.refine is None:
            result = quenc_optimize(graph, config)
        else:
            result = hybrid_pipeline(graph, config, RefineConfig(method=self.refine))
        self.result_ = result
        self.labels_ = result.best_x
        self.energy_ = result.best_energy
        self.trace_ = result.trace
        self.n_features_in_ = graph.num_nodes
        return self

    def score(self, X, y=None):
        """Cut weight of the fitted partition on ``X`` (higher is better)."""
        check_is_fitted(self, "labels_")
        return -maxcut_energy(self._graph(X), self.labels_)
