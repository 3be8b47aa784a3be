"""Layers and networks for the hybrid quantum-classical models.

A network is a list of layers; each layer exposes ``forward(x)`` returning
``(out, cache)`` and ``backward(cache, grad_out)`` returning the gradient
with respect to its input plus a list of parameter gradients.  Parameters
live in each layer's ``params`` list so the whole net can be flattened for
Adam and for finite-difference checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..statevector import Gate, evolve, z_expectations, zero_batch

ACTIVATIONS = ("relu", "sigmoid", "identity")
RING = ((0, 1), (1, 2), (2, 3), (3, 0))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class DenseLayer:
    """Affine map ``x @ W + b`` followed by an activation."""

    def __init__(self, n_in: int, n_out: int, bias: bool = True, activation: str = "relu",
                 rng: np.random.Generator | None = None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if n_in < 1 or n_out < 1:
            raise ValueError("layer sizes must be positive")
        rng = rng or np.random.default_rng(0)
        bound = 1.0 / np.sqrt(n_in)
        self.n_in, self.n_out = n_in, n_out
        self.activation = activation
        self.weight = rng.uniform(-bound, bound, size=(n_in, n_out))
        self.bias = rng.uniform(-bound, bound, size=n_out) if bias else None

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weight] if self.bias is None else [self.weight, self.bias]

    @property
    def in_dim(self) -> int:
        return self.n_in

    @property
    def out_dim(self) -> int:
        return self.n_out

    def forward(self, x, grad: bool = True):
        if x.shape[-1] != self.n_in:
            raise ValueError(f"dense layer expects {self.n_in} inputs, got {x.shape[-1]}")
        z = x @ self.weight
        if self.bias is not None:
            z = z + self.bias
        if self.activation == "relu":
            out = np.maximum(z, 0.0)
        elif self.activation == "sigmoid":
            out = _sigmoid(z)
        else:
            out = z
        return out, (x, z, out)

    def backward(self, cache, grad_out, pre_activation: bool = False):
        """``pre_activation`` means ``grad_out`` is already taken w.r.t. ``z``."""
        x, z, out = cache
        if pre_activation or self.activation == "identity":
            gz = grad_out
        elif self.activation == "relu":
            gz = grad_out * (z > 0)
        else:
            gz = grad_out * out * (1.0 - out)
        grads = [x.T @ gz]
        if self.bias is not None:
            grads.append(gz.sum(axis=0))
        return gz @ self.weight.T, grads

    def describe(self) -> dict:
        return {"type": "dense", "in": self.n_in, "out": self.n_out,
                "bias": self.bias is not None, "activation": self.activation}


@dataclass(frozen=True)
class Encoding:
    feature: int
    qubit: int
    axis: str = "RX"


class QuantumLayer:
    """Four-qubit variational layer.

    Each encoded feature ``f`` becomes a rotation by ``pi * f`` on its qubit,
    followed by ``RY(theta_q)`` on every qubit, a CNOT ring ``0->1->2->3->0``
    and Z readouts.  Parameter gradients use the two-term shift rule on each
    readout; no gradient flows back into the inputs.
    """

    num_qubits = 4

    def __init__(self, encoding, readout, rng: np.random.Generator | None = None,
                 entangler=RING):
        self.encoding = tuple(e if isinstance(e, Encoding) else Encoding(*e) for e in encoding)
        self.readout = tuple(int(q) for q in readout)
        self.entangler = tuple(entangler)
        if not self.readout:
            raise ValueError("readout must list at least one qubit")
        for q in self.readout + tuple(e.qubit for e in self.encoding):
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"qubit {q} out of range")
        for e in self.encoding:
            if e.axis not in ("RX", "RY", "RZ"):
                raise ValueError(f"unsupported encoding axis {e.axis!r}")
        rng = rng or np.random.default_rng(0)
        self.theta = rng.uniform(0.0, 2.0 * np.pi, size=self.num_qubits)

    @property
    def params(self) -> list[np.ndarray]:
        return [self.theta]

    @property
    def in_dim(self) -> int:
        return max(e.feature for e in self.encoding) + 1 if self.encoding else 0

    @property
    def out_dim(self) -> int:
        return len(self.readout)

    def _readouts(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Z expectations for inputs ``x`` (B, F) and per-row angles ``theta`` (B, 4)."""
        n = self.num_qubits
        gates = [Gate(e.axis, e.qubit, angle=np.pi * x[:, e.feature]) for e in self.encoding]
        gates += [Gate("RY", q, angle=theta[:, q]) for q in range(n)]
        gates += [Gate("CNOT", t, c) for c, t in self.entangler]
        psi = evolve(zero_batch(n, x.shape[0]), gates, n)
        probs = psi.real**2 + psi.imag**2
        return np.column_stack([z_expectations(probs, q, n) for q in self.readout])

    def forward(self, x, grad: bool = True):
        if x.ndim != 2 or x.shape[1] < self.in_dim:
            raise ValueError(f"quantum layer expects at least {self.in_dim} features, got shape {x.shape}")
        b, n = x.shape[0], self.num_qubits
        if not grad:
            return self._readouts(x, np.broadcast_to(self.theta, (b, n))), None
        # one pass: unshifted rows, then +pi/2 and -pi/2 shifts of each angle
        shifts = np.vstack([np.zeros(n), np.eye(n) * (np.pi / 2), -np.eye(n) * (np.pi / 2)])
        angles = np.repeat(self.theta + shifts, b, axis=0)
        z = self._readouts(np.tile(x, (2 * n + 1, 1)), angles).reshape(2 * n + 1, b, -1)
        dz = (z[1 : n + 1] - z[n + 1 :]) / 2.0  # (4, B, k)
        return z[0], dz

    def backward(self, cache, grad_out):
        dz = cache
        return None, [np.einsum("qbk,bk->q", dz, grad_out)]

    def describe(self) -> dict:
        return {"type": "quantum", "qubits": self.num_qubits,
                "encoding": [[e.feature, e.qubit, e.axis] for e in self.encoding],
                "readout": list(self.readout), "entangler": [list(p) for p in self.entangler]}


class Network:
    """Sequential stack; a quantum layer, if any, must come first."""

    def __init__(self, layers, task: str = "classification"):
        self.layers = list(layers)
        if task not in ("classification", "regression"):
            raise ValueError("task must be 'classification' or 'regression'")
        self.task = task
        for i, layer in enumerate(self.layers):
            if isinstance(layer, QuantumLayer) and i != 0:
                raise ValueError("a quantum layer can only be the first layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer output {a.out_dim} does not match next input {b.in_dim}")

    @property
    def num_params(self) -> int:
        return sum(p.size for layer in self.layers for p in layer.params)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for layer in self.layers for p in layer.params])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got shape {flat.shape}")
        pos = 0
        for layer in self.layers:
            for p in layer.params:
                p[...] = flat[pos : pos + p.size].reshape(p.shape)
                pos += p.size

    def forward(self, X, return_caches: bool = False):
        x = np.asarray(X, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x, grad=return_caches)
            caches.append(cache)
        out = x[:, 0] if x.shape[1] == 1 else x
        return (out, caches) if return_caches else out

    def predict(self, X):
        return self.forward(X)

    def backward(self, caches, grad_out, pre_activation: bool = False) -> np.ndarray:
        """Flat parameter gradient given dLoss/d(output)."""
        g = grad_out[:, None] if grad_out.ndim == 1 else grad_out
        per_layer = []
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            if isinstance(layer, DenseLayer):
                g, grads = layer.backward(caches[i], g, pre_activation and i == len(self.layers) - 1)
            else:
                g, grads = layer.backward(caches[i], g)
            per_layer.append(grads)
        return np.concatenate([gr.ravel() for grads in reversed(per_layer) for gr in grads])

    def describe(self) -> list[dict]:
        return [layer.describe() for layer in self.layers]

    def save(self, path) -> None:
        """JSON checkpoint with layer descriptions and flattened parameters."""
        payload = {"task": self.task, "layers": self.describe(), "params": self.get_flat().tolist()}
        Path(path).write_text(json.dumps(payload, indent=2))

    @classmethod
    def load(cls, path) -> "Network":
        payload = json.loads(Path(path).read_text())
        layers = []
        for d in payload["layers"]:
            if d["type"] == "quantum":
                layers.append(QuantumLayer([Encoding(*e) for e in d["encoding"]], d["readout"],
                                           entangler=[tuple(p) for p in d["entangler"]]))
            else:
                layers.append(DenseLayer(d["in"], d["out"], d["bias"], d["activation"]))
        net = cls(layers, payload["task"])
        net.set_flat(payload["params"])
        return net


# --- losses ---------------------------------------------------------------

_EPS = 1e-12


def bce_loss(p, y) -> float:
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def mse_loss(pred, y) -> float:
    return float(np.mean((pred - y) ** 2))


def loss_and_grad(net: Network, X, y, loss: str) -> tuple[float, np.ndarray]:
    out, caches = net.forward(X, return_caches=True)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if loss == "bce":
        last = net.layers[-1]
        if not (isinstance(last, DenseLayer) and last.activation == "sigmoid"):
            raise ValueError("BCE needs a sigmoid output layer")
        # sigmoid and cross-entropy together: dL/dz = (p - y) / n
        return bce_loss(out, y), net.backward(caches, (out - y) / n, pre_activation=True)
    if loss == "mse":
        return mse_loss(out, y), net.backward(caches, 2.0 * (out - y) / n)
    raise ValueError(f"unknown loss {loss!r}")


def loss_value(net: Network, X, y, loss: str) -> float:
    out = net.forward(X)
    return bce_loss(out, y) if loss == "bce" else mse_loss(out, y)


# --- the four reference architectures ------------------------------------

def classical_classifier(seed: int = 0, hidden: int = 40) -> Network:
    """2 -> hidden (bias, ReLU) -> 1 (bias, sigmoid); 161 parameters at hidden=40."""
    rng = np.random.default_rng(seed)
    return Network([DenseLayer(2, hidden, True, "relu", rng),
                    DenseLayer(hidden, 1, True, "sigmoid", rng)], "classification")


def hybrid_classifier(seed: int = 0, hidden: int = 40) -> Network:
    """Quantum layer -> hidden (ReLU, no bias) -> 1; 4 + 2*40 + 40 + 1 = 125 parameters at hidden=40.

    Each feature is loaded on two qubits (x0 on 0 and 1, x1 on 2 and 3) and Z
    is read on qubits 0 and 1.  Through the CNOT ring the readouts become
    ``cos^2(pi x0)`` and ``cos(pi x0) cos^2(pi x1)`` up to learned scales, which
    are even about the centre of the data and suit radially separated classes.
    """
    rng = np.random.default_rng(seed)
    q = QuantumLayer([Encoding(0, 0), Encoding(0, 1), Encoding(1, 2), Encoding(1, 3)],
                     readout=(0, 1), rng=rng)
    return Network([q, DenseLayer(2, hidden, False, "relu", rng),
                    DenseLayer(hidden, 1, True, "sigmoid", rng)], "classification")


def classical_regressor(seed: int = 0, width: int = 4, hidden: int = 8) -> Network:
    """2 -> 4 (bias) -> 8 -> 1 with ReLU between; the first layer has 12 parameters."""
    rng = np.random.default_rng(seed)
    return Network([DenseLayer(2, width, True, "relu", rng),
                    DenseLayer(width, hidden, True, "relu", rng),
                    DenseLayer(hidden, 1, True, "identity", rng)], "regression")


def hybrid_regressor(seed: int = 0, hidden: int = 8) -> Network:
    """Quantum layer (features on qubits 0 and 2, Z on all four) -> 8 -> 1."""
    rng = np.random.default_rng(seed)
    q = QuantumLayer([Encoding(0, 0), Encoding(1, 2)], readout=(0, 1, 2, 3), rng=rng)
    return Network([q, DenseLayer(4, hidden, True, "relu", rng),
                    DenseLayer(hidden, 1, True, "identity", rng)], "regression")


ARCHITECTURES = {
    ("classification", "classical"): classical_classifier,
    ("classification", "hybrid"): hybrid_classifier,
    ("regression", "classical"): classical_regressor,
    ("regression", "hybrid"): hybrid_regressor,
}


def build_network(task: str, model: str, seed: int = 0) -> Network:
    try:
        return ARCHITECTURES[(task, model)](seed)
    except KeyError:
        raise ValueError(f"no {model!r} architecture for task {task!r}") from None


def first_layer_params(net: Network) -> int:
    return sum(p.size for p in net.layers[0].params)
