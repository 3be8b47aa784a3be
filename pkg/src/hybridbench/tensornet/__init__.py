"""Quantized tensor trains, QTT Laplacians, and the Poisson solvers."""

from .amen import ConvergenceError, SolveConfig, SolveResult, amen_solve, residual_norm
from .laplacian import PoissonProblem, exact_solution_1d, laplacian_mpo_1d, laplacian_mpo_3d
from .poisson import CGNotConverged, benchmark, cg_solve, cg_solve_3d, tt_solve
from .tt import (
    MPO,
    TTVector,
    mpo_add,
    mpo_apply,
    mpo_identity,
    mpo_kron,
    mpo_round,
    mpo_to_dense,
    ones_tt,
    random_tt,
    tt_add,
    tt_dot,
    tt_from_dense,
    tt_norm,
    tt_round,
    tt_to_dense,
)

__all__ = [
    "ConvergenceError", "SolveConfig", "SolveResult", "amen_solve", "residual_norm",
    "PoissonProblem", "exact_solution_1d", "laplacian_mpo_1d", "laplacian_mpo_3d",
    "CGNotConverged", "benchmark", "cg_solve", "cg_solve_3d", "tt_solve",
    "MPO", "TTVector", "mpo_add", "mpo_apply", "mpo_identity", "mpo_kron", "mpo_round", "mpo_to_dense",
    "ones_tt", "random_tt", "tt_add", "tt_dot", "tt_from_dense", "tt_norm", "tt_round", "tt_to_dense",
]
