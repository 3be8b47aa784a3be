"""Dense state-vector simulation of small parameterized circuits.

Basis index convention: ``k = sum_q b_q * 2**q`` (qubit 0 is the least
significant bit).  Internally amplitudes are kept as a ``(batch, 2**n)``
array so that many parameter settings (parameter-shift evaluations, one
circuit per data sample) can be pushed through the same gate sequence in
one vectorized pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_QUBITS = 30

SINGLE_QUBIT = frozenset({"H", "RX", "RY", "RZ"})
TWO_QUBIT = frozenset({"CNOT", "CZ"})
ROTATIONS = frozenset({"RX", "RY", "RZ"})

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class CircuitError(ValueError):
    """Raised for malformed gates, circuits or qubit counts."""


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 2**self.num_qubits:
            raise CircuitError(
                f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class Gate:
    """One gate of the supported set ``{H, RX, RY, RZ, CNOT, CZ}``.

    ``angle`` may be an array of shape ``(batch,)`` when the gate is applied
    through :func:`evolve`; each batch row then gets its own rotation.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | np.ndarray | None = None

    def validate(self, num_qubits: int) -> None:
        if self.kind not in SINGLE_QUBIT | TWO_QUBIT:
            raise CircuitError(f"unsupported gate kind {self.kind!r}")
        if not 0 <= self.target < num_qubits:
            raise CircuitError(f"target {self.target} out of range for {num_qubits} qubits")
        if self.kind in TWO_QUBIT:
            if self.control is None:
                raise CircuitError(f"{self.kind} requires a control qubit")
            if not 0 <= self.control < num_qubits:
                raise CircuitError(f"control {self.control} out of range")
            if self.control == self.target:
                raise CircuitError("control and target must differ")
        if self.kind in ROTATIONS:
            if self.angle is None:
                raise CircuitError(f"{self.kind} requires an angle")
            if not np.all(np.isfinite(self.angle)):
                raise CircuitError("rotation angle must be finite")


GateSpec = Gate


def _chain(num_qubits: int) -> tuple[tuple[int, int], ...]:
    return tuple((q, q + 1) for q in range(num_qubits - 1))


@dataclass(frozen=True)
class AnsatzSpec:
    """Layered hardware-efficient ansatz.

    Optional Hadamard wall, then per layer one rotation on every qubit
    (angles ``params[layer * num_qubits + q]``) followed by the entangling
    CNOT pattern.  The default pattern is a linear chain ``q -> q+1``.
    """

    num_qubits: int
    layers: int
    entangler: tuple[tuple[int, int], ...] | None = None
    rotation: str = "RY"
    hadamard_wall: bool = True
    pattern: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        _check_qubits(self.num_qubits)
        if self.layers < 1:
            raise CircuitError("ansatz needs at least one layer")
        if self.rotation not in ROTATIONS:
            raise CircuitError(f"rotation axis must be one of {sorted(ROTATIONS)}")
        pattern = _chain(self.num_qubits) if self.entangler is None else tuple(
            (int(c), int(t)) for c, t in self.entangler
        )
        for c, t in pattern:
            Gate("CNOT", t, c).validate(self.num_qubits)
        object.__setattr__(self, "pattern", pattern)

    @property
    def num_params(self) -> int:
        return self.num_qubits * self.layers

    def gates(self, params) -> list[Gate]:
        """Gate list for ``params`` of shape ``(P,)`` or ``(batch, P)``."""
        params = np.asarray(params, dtype=float)
        if params.shape[-1] != self.num_params:
            raise CircuitError(
                f"ansatz takes {self.num_params} parameters, got {params.shape[-1]}"
            )
        out = []
        if self.hadamard_wall:
            out.extend(Gate("H", q) for q in range(self.num_qubits))
        for layer in range(self.layers):
            for q in range(self.num_qubits):
                out.append(Gate(self.rotation, q, angle=params[..., layer * self.num_qubits + q]))
            out.extend(Gate("CNOT", t, c) for c, t in self.pattern)
        return out


def _check_qubits(num_qubits: int) -> None:
    if not isinstance(num_qubits, (int, np.integer)) or not 1 <= num_qubits <= MAX_QUBITS:
        raise CircuitError(f"num_qubits must be an integer in [1, {MAX_QUBITS}], got {num_qubits!r}")


# --- array kernels -------------------------------------------------------

def _rotation_entries(kind: str, angle):
    """Return (m00, m01, m10, m11) for a single-qubit gate; entries broadcast over batch."""
    if kind == "H":
        return _INV_SQRT2, _INV_SQRT2, _INV_SQRT2, -_INV_SQRT2
    half = np.asarray(angle, dtype=float) / 2.0
    c, s = np.cos(half), np.sin(half)
    if kind == "RY":
        return c, -s, s, c
    if kind == "RX":
        return c, -1j * s, -1j * s, c
    # RZ
    return np.exp(-1j * half), 0.0, 0.0, np.exp(1j * half)


def _apply_single(psi: np.ndarray, kind: str, angle, qubit: int, n: int) -> np.ndarray:
    b = psi.shape[0]
    v = psi.reshape(b, 2 ** (n - 1 - qubit), 2, 2**qubit)
    m00, m01, m10, m11 = _rotation_entries(kind, angle)
    if np.ndim(m00):
        m00, m01, m10, m11 = (np.reshape(np.broadcast_to(m, (b,)), (b, 1, 1)) for m in (m00, m01, m10, m11))
    a0 = v[:, :, 0, :]
    a1 = v[:, :, 1, :]
    out = np.empty_like(v)
    out[:, :, 0, :] = m00 * a0 + m01 * a1
    out[:, :, 1, :] = m10 * a0 + m11 * a1
    return out.reshape(b, -1)


def _apply_controlled(psi: np.ndarray, kind: str, control: int, target: int, n: int) -> np.ndarray:
    b = psi.shape[0]
    v = psi.reshape((b,) + (2,) * n)
    ac, at = n - control, n - target  # axis 0 is the batch
    out = v.copy()
    sel = [slice(None)] * (n + 1)
    sel[ac] = 1
    sel = tuple(sel)
    if kind == "CNOT":
        out[sel] = np.flip(v[sel], axis=at - 1 if at > ac else at)
    else:  # CZ
        both = list(sel)
        both[at] = 1
        out[tuple(both)] *= -1
    return out.reshape(b, -1)


def evolve(amplitudes: np.ndarray, gates: Sequence[Gate], num_qubits: int) -> np.ndarray:
    """Apply ``gates`` to a ``(batch, 2**n)`` amplitude array; returns a new array."""
    psi = np.asarray(amplitudes, dtype=np.complex128)
    if psi.ndim != 2 or psi.shape[1] != 2**num_qubits:
        raise CircuitError("amplitudes must have shape (batch, 2**num_qubits)")
    for g in gates:
        g.validate(num_qubits)
        if g.kind in TWO_QUBIT:
            psi = _apply_controlled(psi, g.kind, g.control, g.target, num_qubits)
        else:
            psi = _apply_single(psi, g.kind, g.angle, g.target, num_qubits)
    return psi


def zero_batch(num_qubits: int, batch: int) -> np.ndarray:
    _check_qubits(num_qubits)
    psi = np.zeros((batch, 2**num_qubits), dtype=np.complex128)
    psi[:, 0] = 1.0
    return psi


# --- public operations ---------------------------------------------------

def init_zero(num_qubits: int) -> StateVector:
    _check_qubits(num_qubits)
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if gate.kind in ROTATIONS and np.ndim(gate.angle) != 0:
        raise CircuitError("apply_gate takes a scalar angle")
    psi = evolve(state.amplitudes[None, :], [gate], state.num_qubits)
    return StateVector(state.num_qubits, psi[0])


def run_circuit_batch(ansatz: AnsatzSpec, params) -> np.ndarray:
    """Amplitudes for a ``(batch, P)`` stack of parameter vectors."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    psi = zero_batch(ansatz.num_qubits, params.shape[0])
    return evolve(psi, ansatz.gates(params), ansatz.num_qubits)


def run_circuit(ansatz: AnsatzSpec, params) -> StateVector:
    params = np.asarray(params, dtype=float)
    if params.ndim != 1 or params.shape[0] != ansatz.num_params:
        raise CircuitError(
            f"ansatz takes {ansatz.num_params} parameters, got shape {params.shape}"
        )
    return StateVector(ansatz.num_qubits, run_circuit_batch(ansatz, params)[0])


def probabilities(state: StateVector) -> np.ndarray:
    amps = state.amplitudes
    return amps.real**2 + amps.imag**2


def z_expectations(probs: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    """<Z_qubit> from probability rows of shape ``(..., 2**n)``."""
    lead = probs.shape[:-1]
    v = probs.reshape(lead + (2 ** (num_qubits - 1 - qubit), 2, 2**qubit))
    return v[..., 0, :].sum(axis=(-1, -2)) - v[..., 1, :].sum(axis=(-1, -2))


def expectation_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.num_qubits:
        raise CircuitError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    val = float(z_expectations(probabilities(state), qubit, state.num_qubits))
    return min(1.0, max(-1.0, val))
