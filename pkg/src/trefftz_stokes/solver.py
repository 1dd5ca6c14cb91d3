"""Direct solves of the bordered DG and condensed Trefftz systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .stokes_dg import DGSpace, SparseSystem
from .trefftz import augmented_embedding, condense

RESIDUAL_TOL = 1e-10
MAX_REFINEMENT_STEPS = 3


class SolverError(RuntimeError):
    pass


@dataclass
class Solution:
    coefficients: np.ndarray
    multiplier: float
    method: str
    residual: float = 0.0
    galerkin_residual: float | None = None


def relative_residual(matrix, x, rhs) -> float:
    nb = np.linalg.norm(rhs)
    r = np.linalg.norm(matrix @ x - rhs)
    return float(r / nb) if nb > 0 else float(r)


def solve_direct(matrix, rhs, tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Sparse LU solve with a natural column ordering and iterative refinement.

    Raises ``SolverError`` if the factorization breaks down or the relative
    residual stays above ``tol``.
    """
    A = sp.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    if not np.any(b):
        return np.zeros_like(b)
    try:
        lu = spla.splu(A, permc_spec="COLAMD", options={"SymmetricMode": False})
    except RuntimeError as exc:
        raise SolverError(f"sparse LU failed: {exc}") from exc
    pivots = np.abs(lu.U.diagonal())
    smallest = float(pivots.min())
    if smallest <= np.finfo(float).eps * float(pivots.max()):
        raise SolverError(f"matrix is numerically singular: smallest pivot {smallest:.3e}")

    x = lu.solve(b)
    res = relative_residual(A, x, b)
    for _ in range(MAX_REFINEMENT_STEPS):
        if res < tol:
            break
        x = x + lu.solve(b - A @ x)
        res = relative_residual(A, x, b)
    if not np.isfinite(res) or res >= tol:
        raise SolverError(f"relative residual {res:.3e} above {tol:.1e} (smallest pivot {smallest:.3e})")
    return x


def recover_full(emb, y: np.ndarray) -> np.ndarray:
    """Map Trefftz coefficients back to the DG layout: x = T y + x_p."""
    return emb.T @ y + emb.particular


def solve_dg(system: SparseSystem, space: DGSpace) -> Solution:
    z = solve_direct(system.matrix, system.rhs)
    n = space.ndof
    return Solution(
        coefficients=z[:n],
        multiplier=float(z[n]),
        method="dg",
        residual=relative_residual(system.matrix, z, system.rhs),
    )


def solve_trefftz(system: SparseSystem, space: DGSpace, emb) -> Solution:
    """Condense ``system`` onto the embedding, solve, and recover the DG coefficients."""
    reduced = condense(system, emb)
    y = solve_direct(reduced.matrix, reduced.rhs)
    m = emb.ndof
    x = recover_full(emb, y[:m])
    z = np.concatenate([x, [y[m]]])
    Ta = augmented_embedding(emb)
    proj = Ta.T @ (system.matrix @ z - system.rhs)
    nl = np.linalg.norm(system.rhs)
    gal = float(np.linalg.norm(proj) / nl) if nl > 0 else float(np.linalg.norm(proj))
    return Solution(
        coefficients=x,
        multiplier=float(y[m]),
        method="trefftz",
        residual=relative_residual(reduced.matrix, y, reduced.rhs),
        galerkin_residual=gal,
    )
