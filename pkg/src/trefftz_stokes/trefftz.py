"""Embedded Trefftz reduction of the DG Stokes space.

Per element the constraint matrix W tests ``-nu lap(u) + grad(p)`` against
[P^{k-2}]^2 and ``div(u)`` against P^{k-1}. Its kernel is the local Trefftz
space; a minimum-norm solution of ``W x = r`` gives the particular solution.

Test functions are the element monomials made L2-orthonormal (inverse Cholesky
factor of their mass matrix). This is a row transformation of W, so kernel and
minimum-norm solution are unchanged while the singular values spread far less
on distorted elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .polybasis import dim_poly
from .stokes_dg import LOAD_OVERSAMPLE, DGSpace, SparseSystem

TOL_NULL = 1e-10


class RankError(RuntimeError):
    """Local constraint matrix has no clean numerical rank or is rank deficient."""


@dataclass
class LocalConstraint:
    W: np.ndarray
    rhs: np.ndarray


@dataclass
class LocalKernel:
    basis: np.ndarray
    singular_values: np.ndarray
    rank: int

    @property
    def kernel_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def gap(self) -> float:
        """Smallest kept singular value over the largest discarded one.

        Structurally zero singular values of a wide matrix are not computed by
        the SVD; they are represented by the machine-precision floor.
        """
        s = self.singular_values
        if self.rank == 0:
            return np.inf
        floor = np.finfo(float).eps * s[0] * max(self.basis.shape[0], len(s))
        discarded = s[self.rank :]
        largest = max(discarded.max(initial=0.0), floor)
        return float(s[self.rank - 1] / largest)


@dataclass
class TrefftzEmbedding:
    blocks: list
    particular: np.ndarray
    T: sp.csr_matrix
    ranks: np.ndarray

    @property
    def ndof(self) -> int:
        return self.T.shape[1]

    @property
    def kernel_dims(self) -> np.ndarray:
        return np.array([blk.shape[1] for blk in self.blocks])


def constraint_rows(k: int) -> int:
    return 2 * dim_poly(k - 2) + dim_poly(k - 1)


def _test_functions(space: DGSpace, e: int, pts: np.ndarray):
    # mass matrices are built on the exact rule so both callers share one basis
    k = space.k
    mpts, mw = space.volume_rule(e, 2 * k)
    basis = space.basis(e)
    mphi = basis.values(mpts)
    phi = basis.values(pts)
    out = []
    for m in (dim_poly(k - 2), space.nb_p):
        if m == 0:
            out.append(phi[:, :0])
            continue
        chol = np.linalg.cholesky(mphi[:, :m].T @ (mw[:, None] * mphi[:, :m]))
        out.append(np.linalg.solve(chol, phi[:, :m].T).T)
    return out


def assemble_local_W(space: DGSpace, e: int, nu: float = 1.0) -> np.ndarray:
    k = space.k
    nb_u, nb_p, n_lap = space.nb_u, space.nb_p, dim_poly(k - 2)
    basis = space.basis(e)
    pts, w = space.volume_rule(e, 2 * k)
    grad = basis.gradients(pts)
    lap = basis.laplacians(pts)
    test_m, test_d = _test_functions(space, e, pts)

    W = np.zeros((constraint_rows(k), space.nloc))
    ux = slice(0, nb_u)
    uy = slice(nb_u, 2 * nb_u)
    pp = slice(2 * nb_u, 2 * nb_u + nb_p)
    mx = slice(0, n_lap)
    my = slice(n_lap, 2 * n_lap)
    dv = slice(2 * n_lap, 2 * n_lap + nb_p)
    wl = -nu * test_m.T @ (w[:, None] * lap)
    W[mx, ux] = wl
    W[my, uy] = wl
    W[mx, pp] = test_m.T @ (w[:, None] * grad[:, :nb_p, 0])
    W[my, pp] = test_m.T @ (w[:, None] * grad[:, :nb_p, 1])
    W[dv, ux] = test_d.T @ (w[:, None] * grad[:, :, 0])
    W[dv, uy] = test_d.T @ (w[:, None] * grad[:, :, 1])
    return W


def local_rhs(space: DGSpace, e: int, f, g) -> np.ndarray:
    """Moments (f, test) for momentum rows and -(g, test) for divergence rows."""
    pts, w = space.volume_rule(e, 2 * space.k + LOAD_OVERSAMPLE)
    tm, td = _test_functions(space, e, pts)
    fv = np.asarray(f(pts), dtype=float)
    gv = np.asarray(g(pts), dtype=float)
    return np.concatenate([tm.T @ (w * fv[:, 0]), tm.T @ (w * fv[:, 1]), -td.T @ (w * gv)])


def local_constraint(space: DGSpace, e: int, f, g, nu: float = 1.0) -> LocalConstraint:
    return LocalConstraint(W=assemble_local_W(space, e, nu), rhs=local_rhs(space, e, f, g))


def local_kernel(W: np.ndarray, tol_null: float = TOL_NULL) -> LocalKernel:
    """Orthonormal kernel basis of ``W`` from its full SVD."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    ncols = W.shape[1]
    if W.shape[0] == 0:
        return LocalKernel(np.eye(ncols), np.zeros(0), 0)
    _, s, vt = np.linalg.svd(W, full_matrices=True)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        return LocalKernel(np.eye(ncols), s, 0)
    tol = tol_null * smax
    ambiguous = (s > tol / 10) & (s < tol * 10)
    if ambiguous.any():
        raise RankError(f"ambiguous numerical rank: singular values {s[ambiguous]} near threshold {tol:.3e}")
    rank = int((s > tol).sum())
    return LocalKernel(vt[rank:].T.copy(), s, rank)


def local_particular(constraint: LocalConstraint, tol_null: float = TOL_NULL) -> np.ndarray:
    """Minimum-norm solution of ``W x = rhs``; W must have full row rank."""
    W, r = constraint.W, constraint.rhs
    if W.shape[0] == 0:
        return np.zeros(W.shape[1])
    u, s, vt = np.linalg.svd(W, full_matrices=False)
    if s[-1] <= tol_null * s[0]:
        raise RankError(f"constraint matrix is rank deficient: sigma_min/sigma_max = {s[-1] / s[0]:.3e}")
    return vt.T @ ((u.T @ r) / s)


def build_embedding(space: DGSpace, f, g, nu: float = 1.0, tol_null: float = TOL_NULL) -> TrefftzEmbedding:
    ne = space.mesh.num_elements
    blocks, ranks = [], []
    particular = np.zeros(space.ndof)
    for e in range(ne):
        con = local_constraint(space, e, f, g, nu)
        ker = local_kernel(con.W, tol_null)
        if ker.rank != con.W.shape[0]:
            raise RankError(f"element {e}: rank {ker.rank} < {con.W.shape[0]} constraint rows")
        blocks.append(ker.basis)
        ranks.append(ker.rank)
        particular[space.offset(e) : space.offset(e) + space.nloc] = local_particular(con, tol_null)
    T = sp.block_diag(blocks, format="csr")
    return TrefftzEmbedding(blocks=blocks, particular=particular, T=T, ranks=np.array(ranks))


def augmented_embedding(emb: TrefftzEmbedding) -> sp.csr_matrix:
    """Embedding extended by the identity on the mean-pressure multiplier."""
    return sp.block_diag([emb.T, sp.identity(1)], format="csr")


def condense(system: SparseSystem, emb: TrefftzEmbedding) -> SparseSystem:
    """Galerkin projection of a bordered system onto the Trefftz space.

    The full solution is recovered as ``x = T y + x_p``.
    """
    Ta = augmented_embedding(emb)
    xp = np.concatenate([emb.particular, [0.0]])
    C = (Ta.T @ system.matrix @ Ta).tocsr()
    C = (0.5 * (C + C.T)).tocsr()
    C.sort_indices()
    rhs = Ta.T @ (system.rhs - system.matrix @ xp)
    return SparseSystem(matrix=C, rhs=np.asarray(rhs).ravel(), alpha=system.alpha, nu=system.nu)


def dim_formulas(k: int, d: int = 2) -> tuple[int, int]:
    """Closed-form (dim X_h(T), dim T(T)) for velocity degree ``k`` in ``d`` dimensions."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if d == 2:
        return (3 * k * k + 7 * k + 4) // 2, 4 * k + 2
    if d == 3:
        return (4 * k**3 + 21 * k**2 + 35 * k + 18) // 6, 3 * k * k + 6 * k + 3
    raise ValueError(f"dimension must be 2 or 3, got {d}")


def dim_counts(k: int, d: int = 2) -> tuple[int, int]:
    """Same counts from binomial space dimensions (independent of the closed forms)."""
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    full = d * dim_poly(k, d) + dim_poly(k - 1, d)
    return full, full - d * dim_poly(k - 2, d) - dim_poly(k - 1, d)
