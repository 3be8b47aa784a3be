"""Poisson ``-Lap u = 1`` on the unit cube with zero Dirichlet data: TT and CG solvers."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .amen import SolveConfig, amen_solve
from .laplacian import PoissonProblem
from .tt import TTVector, tt_to_dense

CG_MAX_POINTS = 2**27
BENCH_FIELDS = ("method", "d", "points", "wall_ms", "residual", "max_rank", "iterations", "rel_diff")


class CGNotConverged(RuntimeError):
    def __init__(self, residual: float, iterations: int, solution: np.ndarray):
        super().__init__(f"CG stopped after {iterations} iterations at relative residual {residual:.3e}")
        self.residual = residual
        self.iterations = iterations
        self.solution = solution


def stencil_apply(u: np.ndarray, h: float, out: np.ndarray | None = None) -> np.ndarray:
    """7-point (or 3/5-point) negative Laplacian with zero boundary values."""
    if out is None:
        out = np.empty_like(u)
    np.multiply(u, 2.0 * u.ndim, out=out)
    for ax in range(u.ndim):
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[ax], hi[ax] = slice(1, None), slice(None, -1)
        out[tuple(lo)] -= u[tuple(hi)]
        out[tuple(hi)] -= u[tuple(lo)]
    out *= 1.0 / (h * h)
    return out


def cg_solve(levels: int, dim: int = 3, rhs: float = 1.0, tol: float = 1e-8,
             max_iters: int | None = None) -> tuple[np.ndarray, int]:
    """Matrix-free conjugate gradient on the ``(2**levels)**dim`` Dirichlet grid.

    Returns the grid solution (array axes ordered z, y, x, so x varies fastest
    in C order) and the iteration count.
    """
    n = 2**levels
    if n**dim > CG_MAX_POINTS:
        raise MemoryError(f"{n ** dim} grid points exceed the dense limit of {CG_MAX_POINTS}")
    h = 1.0 / (n + 1)
    shape = (n,) * dim
    max_iters = 10 * n * dim + 100 if max_iters is None else max_iters
    x = np.zeros(shape)
    r = np.full(shape, float(rhs))
    b_norm = float(np.linalg.norm(r))
    if b_norm == 0.0:
        return x, 0
    p = r.copy()
    ap = np.empty(shape)
    rr = float(np.vdot(r, r))
    for it in range(1, max_iters + 1):
        stencil_apply(p, h, out=ap)
        alpha = rr / float(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.vdot(r, r))
        if np.sqrt(rr_new) <= tol * b_norm:
            return x, it
        p *= rr_new / rr
        p += r
        rr = rr_new
    raise CGNotConverged(np.sqrt(rr) / b_norm, max_iters, x)


def cg_solve_3d(levels: int, rhs: float = 1.0, tol: float = 1e-8, max_iters: int | None = None):
    return cg_solve(levels, 3, rhs, tol, max_iters)


def tt_solve(problem: PoissonProblem, config: SolveConfig = SolveConfig()):
    return amen_solve(problem.operator(), problem.rhs(), config)


@dataclass
class BenchRow:
    method: str
    d: int
    points: int
    wall_ms: float
    residual: float
    max_rank: int | None = None
    iterations: int | None = None
    rel_diff: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in BENCH_FIELDS}


def benchmark(dim: int, levels: int, methods=("tt", "cg"), tol: float = 1e-8,
              config: SolveConfig | None = None, keep_solutions: bool = False):
    """Time each method on one problem size; returns (rows, solutions by method)."""
    problem = PoissonProblem(dim, levels)
    config = config or SolveConfig(tol=tol)
    rows, sols = [], {}
    for method in methods:
        if method == "tt":
            t0 = time.perf_counter()
            res = tt_solve(problem, config)
            wall = (time.perf_counter() - t0) * 1e3
            rows.append(BenchRow("tt", levels, problem.num_points, wall, res.residual,
                                 max_rank=res.x.max_rank, iterations=res.sweeps))
            if keep_solutions and problem.num_points <= CG_MAX_POINTS:
                sols["tt"] = tt_to_dense(res.x)
            elif keep_solutions:
                sols["tt"] = res.x
        elif method == "cg":
            t0 = time.perf_counter()
            u, its = cg_solve(levels, dim, tol=tol)
            wall = (time.perf_counter() - t0) * 1e3
            h = problem.h
            resid = np.linalg.norm(stencil_apply(u, h) - 1.0) / np.sqrt(u.size)
            rows.append(BenchRow("cg", levels, problem.num_points, wall, float(resid), iterations=its))
            if keep_solutions:
                sols["cg"] = u.reshape(-1)
        else:
            raise ValueError(f"unknown method {method!r}")
    if "tt" in sols and "cg" in sols and not isinstance(sols["tt"], TTVector):
        diff = float(np.linalg.norm(sols["tt"] - sols["cg"]) / np.linalg.norm(sols["cg"]))
        for row in rows:
            row.rel_diff = diff
    return rows, sols


def write_bench_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow(row.as_dict())


def export_solution(values: np.ndarray, path, fmt: str = "csv") -> None:
    """Flat grid values with x varying fastest, as CSV (one value per line) or raw float64."""
    flat = np.asarray(values, dtype=float).reshape(-1)
    path = Path(path)
    if fmt == "csv":
        np.savetxt(path, flat, fmt="%.17g")
    elif fmt == "bin":
        flat.astype("<f8").tofile(path)
    else:
        raise ValueError("format must be 'csv' or 'bin'")
