"""Adam and a central finite-difference gradient used as a test oracle."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.t < 0:
            raise ValueError("step count must be non-negative")
        if np.shape(self.m) != np.shape(self.v):
            raise ValueError("moment arrays must have equal shape")

    @classmethod
    def create(cls, num_params: int, lr: float = 1e-3, **hyper) -> "AdamState":
        return cls(np.zeros(num_params), np.zeros(num_params), 0, lr, **hyper)


def adam_update(state: AdamState, params, grads) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam step. Inputs are not modified."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise FloatingPointError("non-finite gradient")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), new_params


def finite_diff_grad(f: Callable[[np.ndarray], float], params, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(x + h e_k) - f(x - h e_k)) / 2h``."""
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.array(params, dtype=float)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = float(f(x))
        flat[k] = old - h
        fm = float(f(x))
        flat[k] = old
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"objective not finite around parameter {k}")
        grad[k] = (fp - fm) / (2.0 * h)
    return grad.reshape(x.shape)
