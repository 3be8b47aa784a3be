"""QTT finite-difference Laplacians on Dirichlet grids with 2**d interior points per axis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tt import MPO, TTVector, mpo_add, mpo_identity, mpo_kron, mpo_round, ones_tt


@dataclass(frozen=True)
class PoissonProblem:
    dim: int
    levels: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")

    @property
    def points_per_axis(self) -> int:
        return 2**self.levels

    @property
    def num_points(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def h(self) -> float:
        return 1.0 / (self.points_per_axis + 1)

    def grid(self) -> np.ndarray:
        return self.h * np.arange(1, self.points_per_axis + 1)

    def operator(self) -> MPO:
        if self.dim == 1:
            return laplacian_mpo_1d(self.levels)
        if self.dim == 3:
            return laplacian_mpo_3d(self.levels)
        a = laplacian_mpo_1d(self.levels)
        eye = mpo_identity(self.levels)
        return mpo_round(mpo_add(mpo_kron(a, eye), mpo_kron(eye, a)))

    def rhs(self) -> TTVector:
        return ones_tt(self.dim * self.levels)


def _carry_core() -> np.ndarray:
    # bond states: 0 = digits equal so far, 1 = row is col + 1 (carry pending),
    # 2 = col is row + 1.  Index order (state toward MSB, row bit, col bit, state from LSB).
    c = np.zeros((3, 2, 2, 3))
    c[0, 0, 0, 0] = c[0, 1, 1, 0] = 1.0
    c[0, 1, 0, 1] = 1.0  # carry absorbed: row bit 1, col bit 0
    c[1, 0, 1, 1] = 1.0  # carry propagates: row bit 0, col bit 1
    c[0, 0, 1, 2] = 1.0
    c[2, 1, 0, 2] = 1.0
    return c


def laplacian_mpo_1d(d: int) -> MPO:
    """``(1/h^2) tridiag(-1, 2, -1)`` on ``2**d`` points, bond ranks <= 3."""
    if d < 1:
        raise ValueError("need at least one level")
    h = 1.0 / (2**d + 1)
    core = _carry_core()
    closing = np.array([2.0, -1.0, -1.0]) / h**2
    if d == 1:
        return MPO((np.einsum("aijb,b->aij", core[:1], closing)[..., None],))
    cores = [core[:1]] + [core] * (d - 2) + [np.einsum("aijb,b->aij", core, closing)[..., None]]
    return MPO(tuple(cores))


def laplacian_mpo_3d(d: int) -> MPO:
    """Kronecker sum ``A x I x I + I x A x I + I x I x A`` over ``3d`` cores."""
    a = laplacian_mpo_1d(d)
    eye = mpo_identity(d)
    total = mpo_add(mpo_add(mpo_kron(a, eye, eye), mpo_kron(eye, a, eye)), mpo_kron(eye, eye, a))
    return mpo_round(total)


def exact_solution_1d(d: int) -> np.ndarray:
    """Grid values of ``x (1 - x) / 2``, which the second difference reproduces exactly."""
    x = PoissonProblem(1, d).grid()
    return x * (1.0 - x) / 2.0
