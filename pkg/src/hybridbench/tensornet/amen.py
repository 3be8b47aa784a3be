"""Alternating minimal-energy solver for ``A x = b`` in tensor-train format.

One-site ALS sweeps with residual-based rank enrichment: besides the
solution ``x`` the solver carries a small auxiliary train ``z`` that tracks
the residual; after each local solve, the residual projected onto ``z``'s
frame is appended to the current core as extra basis directions.  Ranks are
truncated with a local-residual criterion, so only directions that matter for
``||A x - b||`` are kept.  Sweep direction alternates by reversing all trains.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .tt import MPO, TTVector, mpo_apply, random_tt, right_orthogonalize, tt_add, tt_norm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-8
    max_sweeps: int = 40
    max_rank: int = 64
    kickrank: int = 8
    max_full: int = 500
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_rank < 1:
            raise ValueError("max_rank must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.kickrank < 0:
            raise ValueError("kickrank must be >= 0")


@dataclass
class SolveResult:
    x: TTVector
    residual: float
    sweeps: int
    history: list[float] = field(default_factory=list)
    converged: bool = True

    def __iter__(self):
        return iter((self.x, self.residual, self.sweeps))


class ConvergenceError(RuntimeError):
    """The solver stopped above tolerance; ``result`` holds the last iterate."""

    def __init__(self, message: str, result):
        super().__init__(message)
        self.result = result
        self.residual = result.residual


# --- local contractions --------------------------------------------------
# operator interfaces have index order (row frame, operator bond, column frame)

def _left_op(phi, xr, a, xc):
    t = np.tensordot(phi, xr, axes=([0], [0]))  # (A, c, i, b)
    t = np.tensordot(t, a, axes=([0, 2], [0, 1]))  # (c, b, j, B)
    return np.tensordot(t, xc, axes=([0, 2], [0, 1]))  # (b, B, d)


def _right_op(phi, xr, a, xc):
    t = np.tensordot(xr, phi, axes=([2], [0]))  # (a, i, B, d)
    t = np.tensordot(t, a, axes=([1, 2], [1, 3]))  # (a, d, A, j)
    t = np.tensordot(t, xc, axes=([1, 3], [2, 1]))  # (a, A, c)
    return t


def _left_vec(psi, xr, f):
    t = np.tensordot(psi, xr, axes=([0], [0]))  # (s, i, b)
    return np.tensordot(t, f, axes=([0, 1], [0, 1]))  # (b, t)


def _right_vec(psi, xr, f):
    t = np.tensordot(xr, psi, axes=([2], [0]))  # (a, i, t)
    return np.tensordot(t, f, axes=([1, 2], [1, 2]))  # (a, s)


def _apply_local(pl, a, pr, u):
    t = np.tensordot(pl, u, axes=([2], [0]))  # (a, A, j, d)
    t = np.tensordot(t, a, axes=([1, 2], [0, 2]))  # (a, d, i, B)
    return np.tensordot(t, pr, axes=([1, 3], [2, 1]))  # (a, i, b)


def _local_rhs(ql, f, qr):
    t = np.tensordot(ql, f, axes=([1], [0]))  # (a, i, t)
    return np.tensordot(t, qr, axes=([2], [1]))  # (a, i, b)


def _local_matrix(pl, a, pr):
    t = np.tensordot(pl, a, axes=([1], [0]))  # (a, c, i, j, B)
    t = np.tensordot(t, pr, axes=([4], [1]))  # (a, c, i, j, b, d)
    n = pl.shape[0] * a.shape[1] * pr.shape[0]
    return t.transpose(0, 2, 4, 1, 3, 5).reshape(n, n)


def _local_diagonal(pl, a, pr):
    pl_d = np.einsum("aAa->aA", pl)
    a_d = np.einsum("AiiB->AiB", a)
    pr_d = np.einsum("bBb->bB", pr)
    return np.einsum("aA,AiB,bB->aib", pl_d, a_d, pr_d, optimize=True)


def _solve_local(pl, a, pr, f, u0, max_full, rtol=1e-12):
    shape = u0.shape
    if u0.size <= max_full:
        m = _local_matrix(pl, a, pr)
        try:
            sol = scipy.linalg.cho_solve(scipy.linalg.cho_factor(m, check_finite=False), f.reshape(-1),
                                         check_finite=False)
        except np.linalg.LinAlgError:
            sol = scipy.linalg.solve(m, f.reshape(-1), check_finite=False)
        return sol.reshape(shape), m

    def mv(v):
        return _apply_local(pl, a, pr, v.reshape(shape)).reshape(-1)

    op = spla.LinearOperator((u0.size, u0.size), matvec=mv, dtype=float)
    inv_diag = 1.0 / _local_diagonal(pl, a, pr).reshape(-1)
    jacobi = spla.LinearOperator(op.shape, matvec=lambda v: inv_diag * v.reshape(-1), dtype=float)
    # SPD local matrices: Jacobi-preconditioned CG warm-started from the previous core
    sol, _ = spla.cg(op, f.reshape(-1), x0=u0.reshape(-1), rtol=rtol, maxiter=500, M=jacobi)
    return sol.reshape(shape), op


def _residual_norm(op, u, f) -> float:
    return float(np.linalg.norm(op @ u.reshape(-1) - f.reshape(-1)))


def _truncate(u, op, f, target, max_rank):
    """Smallest rank whose truncated core keeps the local residual below ``target``."""
    r0, n, r1 = u.shape
    uu, s, vt = np.linalg.svd(u.reshape(r0 * n, r1), full_matrices=False)
    hi = min(len(s), max_rank)

    def res(r):
        return _residual_norm(op, (uu[:, :r] * s[:r]) @ vt[:r], f)

    lo = 1
    if res(hi) > target:
        return uu[:, :hi], s[:hi, None] * vt[:hi]
    while lo < hi:
        mid = (lo + hi) // 2
        if res(mid) <= target:
            hi = mid
        else:
            lo = mid + 1
    return uu[:, :hi], s[:hi, None] * vt[:hi]


def _reverse_cores(cores):
    return [c.transpose(2, 1, 0) for c in reversed(cores)]


def _reverse_ops(cores):
    return [c.transpose(3, 1, 2, 0) for c in reversed(cores)]


def residual_norm(A: MPO, x: TTVector, b: TTVector) -> float:
    """``||A x - b||`` evaluated in TT arithmetic."""
    return tt_norm(tt_add(mpo_apply(A, x), b, 1.0, -1.0))


def amen_solve(A: MPO, b: TTVector, config: SolveConfig = SolveConfig(), x0: TTVector | None = None,
               raise_on_failure: bool = True) -> SolveResult:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Returns a :class:`SolveResult` (unpacks as ``x, residual, sweeps``) with
    the relative residual ``||A x - b|| / ||b||``.  If ``max_sweeps`` pass
    without reaching ``config.tol`` a :class:`ConvergenceError` carrying the
    result is raised (or the result is returned with ``converged=False``).
    """
    if A.dims != b.dims:
        raise ValueError(f"operator acts on {A.dims}, right-hand side has {b.dims}")
    d = b.ndim
    b_norm = tt_norm(b)
    if b_norm == 0.0:
        zero = TTVector(tuple(np.zeros((1, n, 1)) for n in b.dims))
        return SolveResult(zero, 0.0, 0, [0.0])

    rng = np.random.default_rng(config.seed)
    a_cores = list(A.cores)
    f_cores = list(b.cores)
    x = [c.copy() for c in (x0 if x0 is not None else b).cores]
    q = config.kickrank
    z = list(random_tt(b.dims, max(q, 1), rng).cores)
    right_orthogonalize(x)
    right_orthogonalize(z)

    one3, one2 = np.ones((1, 1, 1)), np.ones((1, 1))
    xax = [one3] * (d + 1)
    xb = [one2] * (d + 1)
    zax = [one3] * (d + 1)
    zb = [one2] * (d + 1)
    for k in range(d - 1, 0, -1):
        xax[k] = _right_op(xax[k + 1], x[k], a_cores[k], x[k])
        xb[k] = _right_vec(xb[k + 1], x[k], f_cores[k])
        zax[k] = _right_op(zax[k + 1], z[k], a_cores[k], x[k])
        zb[k] = _right_vec(zb[k + 1], z[k], f_cores[k])

    history: list[float] = []
    reversed_ = False
    sweeps = 0
    residual = np.inf
    for sweep in range(1, config.max_sweeps + 1):
        for k in range(d):
            f = _local_rhs(xb[k], f_cores[k], xb[k + 1])
            f_norm = float(np.linalg.norm(f))
            u, op = _solve_local(xax[k], a_cores[k], xax[k + 1], f, x[k], config.max_full, 0.1 * config.tol)
            if k == d - 1:
                x[k] = u
                break
            if q > 0:
                zres = (_apply_local(zax[k], a_cores[k], zax[k + 1], u)
                        - _local_rhs(zb[k], f_cores[k], zb[k + 1]))
                xres = (_apply_local(xax[k], a_cores[k], zax[k + 1], u)
                        - _local_rhs(xb[k], f_cores[k], zb[k + 1]))
            target = max(_residual_norm(op, u, f), 0.5 * config.tol * f_norm)
            basis, carry = _truncate(u, op, f, target, config.max_rank)
            r0, n, _ = u.shape
            if q > 0:
                qz, _ = np.linalg.qr(zres.reshape(zres.shape[0] * n, -1))
                z[k] = qz.reshape(zres.shape[0], n, qz.shape[1])
                stacked = np.hstack([basis, xres.reshape(r0 * n, -1)])
                qx, rx = np.linalg.qr(stacked)
                carry = rx[:, : basis.shape[1]] @ carry
                basis = qx
            x[k] = basis.reshape(r0, n, basis.shape[1])
            x[k + 1] = np.einsum("ab,bic->aic", carry, x[k + 1])
            xax[k + 1] = _left_op(xax[k], x[k], a_cores[k], x[k])
            xb[k + 1] = _left_vec(xb[k], x[k], f_cores[k])
            if q > 0:
                zax[k + 1] = _left_op(zax[k], z[k], a_cores[k], x[k])
                zb[k + 1] = _left_vec(zb[k], z[k], f_cores[k])
        sweeps = sweep
        xt = TTVector(tuple(x))
        residual = residual_norm(MPO(tuple(a_cores)), xt, TTVector(tuple(f_cores))) / b_norm
        history.append(residual)
        log.debug("sweep %d: residual %.3e, max rank %d", sweep, residual, xt.max_rank)
        if residual <= config.tol:
            break
        # reverse everything so the next sweep runs right-to-left on the original
        x, z = _reverse_cores(x), _reverse_cores(z)
        a_cores, f_cores = _reverse_ops(a_cores), _reverse_cores(f_cores)
        xax, xb, zax, zb = xax[::-1], xb[::-1], zax[::-1], zb[::-1]
        reversed_ = not reversed_

    if reversed_:
        x = _reverse_cores(x)
    result = SolveResult(TTVector(tuple(x)), float(residual), sweeps, history, residual <= config.tol)
    if not result.converged:
        msg = f"AMEn stopped after {sweeps} sweeps at relative residual {residual:.3e} > {config.tol:.1e}"
        if raise_on_failure:
            raise ConvergenceError(msg, result)
        log.warning(msg)
    return result
