"""Tensor-train vectors and matrix-product operators.

Cores of a :class:`TTVector` have shape ``(r_{k-1}, n_k, r_k)`` and those of
an :class:`MPO` shape ``(R_{k-1}, n_k, n_k, R_k)`` (row index before column
index).  Dense conversion uses C order, so core 0 carries the most
significant digit of the flat index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

DENSE_MAX_CORES = 24


@dataclass(frozen=True, eq=False)
class TTVector:
    cores: tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=float) for c in self.cores)
        if not cores:
            raise ValueError("a tensor train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {k} must be 3-dimensional, got shape {c.shape}")
            if k and c.shape[0] != cores[k - 1].shape[2]:
                raise ValueError(f"rank mismatch between cores {k - 1} and {k}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("boundary ranks must be 1")
        object.__setattr__(self, "cores", cores)

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        """Interior bond ranks ``r_1 .. r_{D-1}``."""
        return tuple(c.shape[2] for c in self.cores[:-1])

    @property
    def size(self) -> int:
        return int(np.prod(self.dims, dtype=object))

    @property
    def max_rank(self) -> int:
        return max(self.ranks, default=1)

    def norm(self) -> float:
        return tt_norm(self)

    def __neg__(self):
        return scale(self, -1.0)

    def __add__(self, other):
        return tt_add(self, other)

    def __sub__(self, other):
        return tt_add(self, other, 1.0, -1.0)

    def __mul__(self, alpha):
        return scale(self, float(alpha))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class MPO:
    cores: tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=float) for c in self.cores)
        if not cores:
            raise ValueError("an MPO needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 4 or c.shape[1] != c.shape[2]:
                raise ValueError(f"core {k} must have shape (R, n, n, R'), got {c.shape}")
            if k and c.shape[0] != cores[k - 1].shape[3]:
                raise ValueError(f"rank mismatch between cores {k - 1} and {k}")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise ValueError("boundary ranks must be 1")
        object.__setattr__(self, "cores", cores)

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[3] for c in self.cores[:-1])

    def __matmul__(self, x):
        return mpo_apply(self, x)


def _check_same_shape(a, b) -> None:
    if a.dims != b.dims:
        raise ValueError(f"mode sizes differ: {a.dims} vs {b.dims}")


def _binary_cores(length: int) -> int:
    if length < 1 or length & (length - 1):
        raise ValueError(f"length {length} is not a power of two")
    return max(1, length.bit_length() - 1)


def _truncation_rank(s: np.ndarray, delta: float, max_rank: int | None) -> int:
    """Smallest rank whose discarded singular values have 2-norm <= delta."""
    tail = np.sqrt(np.cumsum((s * s)[::-1]))[::-1]  # tail[r] = norm of s[r:]
    if delta > 0:
        r = int(np.searchsorted(-tail, -delta, side="left"))
    else:
        # exact mode still drops singular values at round-off level
        r = int(np.count_nonzero(s > s[0] * len(s) * np.finfo(float).eps)) if len(s) else 0
    r = max(1, min(r, len(s)))
    if max_rank is not None:
        r = min(r, max_rank)
    return r


def tt_from_dense(vector, tol: float = 0.0, max_rank: int | None = None,
                  dims: Sequence[int] | None = None) -> TTVector:
    """Sequential SVD factorization; ``||out - vector|| <= tol * ||vector||``."""
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    v = np.asarray(vector, dtype=float).reshape(-1)
    if dims is None:
        dims = (2,) * _binary_cores(v.size)
    elif int(np.prod(dims)) != v.size:
        raise ValueError("dims do not match the vector length")
    d = len(dims)
    delta = tol * np.linalg.norm(v) / np.sqrt(max(1, d - 1))
    cores = []
    rest = v.reshape(1, -1)
    r = 1
    for k in range(d - 1):
        mat = rest.reshape(r * dims[k], -1)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        rk = _truncation_rank(s, delta, max_rank)
        cores.append(u[:, :rk].reshape(r, dims[k], rk))
        rest = s[:rk, None] * vt[:rk]
        r = rk
    cores.append(rest.reshape(r, dims[-1], 1))
    return TTVector(tuple(cores))


def tt_to_dense(tt: TTVector) -> np.ndarray:
    if tt.ndim > DENSE_MAX_CORES:
        raise ValueError(f"refusing to densify {tt.ndim} cores (limit {DENSE_MAX_CORES})")
    out = tt.cores[0].reshape(-1, tt.cores[0].shape[2])
    for c in tt.cores[1:]:
        out = (out @ c.reshape(c.shape[0], -1)).reshape(-1, c.shape[2])
    return out.reshape(-1)


def tt_entry(tt: TTVector, index) -> float:
    """Entry at multi-index ``index`` (one digit per core)."""
    row = np.ones((1, 1))
    for c, i in zip(tt.cores, index):
        row = row @ c[:, i, :]
    return float(row[0, 0])


def ones_tt(ndim: int, n: int = 2) -> TTVector:
    if ndim < 1:
        raise ValueError("need at least one core")
    return TTVector(tuple(np.ones((1, n, 1)) for _ in range(ndim)))


def random_tt(dims: Sequence[int], ranks, rng) -> TTVector:
    dims = list(dims)
    if np.isscalar(ranks):
        ranks = [int(ranks)] * (len(dims) - 1)
    full = [1, *ranks, 1]
    return TTVector(tuple(rng.standard_normal((full[k], n, full[k + 1])) for k, n in enumerate(dims)))


def scale(tt: TTVector, alpha: float) -> TTVector:
    cores = list(tt.cores)
    cores[0] = cores[0] * alpha
    return TTVector(tuple(cores))


def tt_add(a: TTVector, b: TTVector, alpha: float = 1.0, beta: float = 1.0) -> TTVector:
    """Block construction of ``alpha * a + beta * b``; ranks add."""
    _check_same_shape(a, b)
    d = a.ndim
    if d == 1:
        return TTVector((alpha * a.cores[0] + beta * b.cores[0],))
    cores = []
    for k, (ca, cb) in enumerate(zip(a.cores, b.cores)):
        if k == 0:
            core = np.concatenate([alpha * ca, beta * cb], axis=2)
        elif k == d - 1:
            core = np.concatenate([ca, cb], axis=0)
        else:
            ra0, n, ra1 = ca.shape
            rb0, _, rb1 = cb.shape
            core = np.zeros((ra0 + rb0, n, ra1 + rb1))
            core[:ra0, :, :ra1] = ca
            core[ra0:, :, ra1:] = cb
        cores.append(core)
    return TTVector(tuple(cores))


def tt_dot(a: TTVector, b: TTVector) -> float:
    _check_same_shape(a, b)
    env = np.ones((1, 1))
    for ca, cb in zip(a.cores, b.cores):
        env = np.einsum("ab,aic,bid->cd", env, ca, cb, optimize=True)
    return float(env[0, 0])


def left_orthogonalize(cores: list[np.ndarray], upto: int | None = None) -> list[np.ndarray]:
    """QR sweep making cores ``0..upto-1`` left-orthonormal (in place on the list)."""
    upto = len(cores) - 1 if upto is None else upto
    for k in range(upto):
        r0, n, r1 = cores[k].shape
        q, r = np.linalg.qr(cores[k].reshape(r0 * n, r1))
        cores[k] = q.reshape(r0, n, q.shape[1])
        cores[k + 1] = np.einsum("ab,bic->aic", r, cores[k + 1])
    return cores


def right_orthogonalize(cores: list[np.ndarray], downto: int = 0) -> list[np.ndarray]:
    """QR sweep making cores ``downto+1..D-1`` right-orthonormal (in place on the list)."""
    for k in range(len(cores) - 1, downto, -1):
        r0, n, r1 = cores[k].shape
        q, r = np.linalg.qr(cores[k].reshape(r0, n * r1).T)
        cores[k] = q.T.reshape(q.shape[1], n, r1)
        cores[k - 1] = np.einsum("aib,cb->aic", cores[k - 1], r)
    return cores


def tt_norm(tt: TTVector) -> float:
    """Euclidean norm via orthogonalization (no cancellation in the inner product)."""
    cores = left_orthogonalize(list(tt.cores))
    return float(np.linalg.norm(cores[-1]))


def tt_round(tt: TTVector, tol: float = 1e-10, max_rank: int | None = None) -> TTVector:
    """Orthogonalize right-to-left, then truncate left-to-right with SVDs."""
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    d = tt.ndim
    cores = right_orthogonalize(list(tt.cores))
    nrm = float(np.linalg.norm(cores[0]))
    if d == 1:
        return TTVector(tuple(cores))
    delta = tol * nrm / np.sqrt(d - 1)
    for k in range(d - 1):
        r0, n, r1 = cores[k].shape
        u, s, vt = np.linalg.svd(cores[k].reshape(r0 * n, r1), full_matrices=False)
        rk = _truncation_rank(s, delta, max_rank)
        cores[k] = u[:, :rk].reshape(r0, n, rk)
        cores[k + 1] = np.einsum("ab,bic->aic", s[:rk, None] * vt[:rk], cores[k + 1])
    return TTVector(tuple(cores))


def reverse(tt: TTVector) -> TTVector:
    return TTVector(tuple(c.transpose(2, 1, 0) for c in reversed(tt.cores)))


# --- operators -----------------------------------------------------------

def mpo_identity(ndim: int, n: int = 2) -> MPO:
    return MPO(tuple(np.eye(n).reshape(1, n, n, 1) for _ in range(ndim)))


def mpo_to_dense(op: MPO) -> np.ndarray:
    if op.ndim > DENSE_MAX_CORES // 2:
        raise ValueError("operator too large to densify")
    out = np.ones((1, 1, 1))
    for c in op.cores:
        rows, cols, _ = out.shape
        out = np.einsum("xya,aijb->xiyjb", out, c).reshape(rows * c.shape[1], cols * c.shape[2], c.shape[3])
    return out[:, :, 0]


def mpo_apply(op: MPO, x: TTVector) -> TTVector:
    """Exact product; bond ranks multiply (round afterwards)."""
    if op.dims != x.dims:
        raise ValueError(f"operator acts on {op.dims}, vector has {x.dims}")
    cores = []
    for a, c in zip(op.cores, x.cores):
        ra0, n, _, ra1 = a.shape
        rx0, _, rx1 = c.shape
        cores.append(np.einsum("aijb,cjd->acibd", a, c).reshape(ra0 * rx0, n, ra1 * rx1))
    return TTVector(tuple(cores))


def mpo_add(a: MPO, b: MPO, alpha: float = 1.0, beta: float = 1.0) -> MPO:
    if a.dims != b.dims:
        raise ValueError("operators act on different spaces")
    ta = TTVector(tuple(c.reshape(c.shape[0], -1, c.shape[3]) for c in a.cores))
    tb = TTVector(tuple(c.reshape(c.shape[0], -1, c.shape[3]) for c in b.cores))
    return _tt_to_mpo(tt_add(ta, tb, alpha, beta), a.dims)


def mpo_kron(*ops: MPO) -> MPO:
    """Kronecker product; the first factor occupies the leading (most significant) cores."""
    return MPO(tuple(c for op in ops for c in op.cores))


def _tt_to_mpo(tt: TTVector, dims) -> MPO:
    return MPO(tuple(c.reshape(c.shape[0], n, n, c.shape[2]) for c, n in zip(tt.cores, dims)))


def mpo_round(op: MPO, tol: float = 1e-14, max_rank: int | None = None) -> MPO:
    tt = TTVector(tuple(c.reshape(c.shape[0], -1, c.shape[3]) for c in op.cores))
    return _tt_to_mpo(tt_round(tt, tol, max_rank), op.dims)


def mpo_reverse(op: MPO) -> MPO:
    return MPO(tuple(c.transpose(3, 1, 2, 0) for c in reversed(op.cores)))
