"""Symmetric interior-penalty DG discretization of the Stokes problem.

Degrees of freedom are stored element by element as
``[u_x (dim P^k), u_y (dim P^k), p (dim P^{k-1})]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh
from .polybasis import (
    BasisSet,
    dim_poly,
    element_basis,
    map_segment_rule,
    map_triangle_rule,
    segment_quadrature,
    triangle_quadrature,
)

LOAD_OVERSAMPLE = 8


@dataclass(frozen=True, eq=False)
class DGSpace:
    mesh: Mesh
    k: int
    _bases: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"velocity degree must be >= 1, got {self.k}")
        bases = tuple(element_basis(self.mesh, e, self.k) for e in range(self.mesh.num_elements))
        object.__setattr__(self, "_bases", bases)

    @property
    def nb_u(self) -> int:
        return dim_poly(self.k)

    @property
    def nb_p(self) -> int:
        return dim_poly(self.k - 1)

    @property
    def nloc(self) -> int:
        return 2 * self.nb_u + self.nb_p

    @property
    def ndof(self) -> int:
        return self.mesh.num_elements * self.nloc

    def basis(self, e: int) -> BasisSet:
        return self._bases[e]

    def offset(self, e: int) -> int:
        return e * self.nloc

    def velocity_dofs(self, e: int, c: int) -> np.ndarray:
        start = self.offset(e) + c * self.nb_u
        return np.arange(start, start + self.nb_u)

    def pressure_dofs(self, e: int) -> np.ndarray:
        start = self.offset(e) + 2 * self.nb_u
        return np.arange(start, start + self.nb_p)

    def local(self, x: np.ndarray, e: int):
        """Split the global vector ``x`` into (u_x, u_y, p) coefficients on element ``e``."""
        xe = x[self.offset(e) : self.offset(e) + self.nloc]
        nb = self.nb_u
        return xe[:nb], xe[nb : 2 * nb], xe[2 * nb :]

    def volume_rule(self, e: int, exactness: int):
        return map_triangle_rule(self.mesh.element_vertices(e), triangle_quadrature(exactness))

    def facet_rule(self, e: int, local_edge: int, exactness: int):
        geo = self.mesh.facet_geometry(e, local_edge)
        pts, w = map_segment_rule(geo.endpoints, segment_quadrature(exactness))
        return pts, w, geo.normal

    def facets(self):
        """Yield ``(a, b, local_edge_of_a)`` for all facets; ``b`` is None on the boundary."""
        for a, la, b, _ in self.mesh.interior_facets:
            yield int(a), int(b), int(la)
        for a, la in self.mesh.boundary_facets:
            yield int(a), None, int(la)

    @cached_property
    def pressure_mask(self) -> np.ndarray:
        mask = np.zeros(self.ndof, dtype=bool)
        for e in range(self.mesh.num_elements):
            mask[self.pressure_dofs(e)] = True
        return mask


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    alpha: float
    nu: float


def default_alpha(k: int, alpha_scale: float = 10.0) -> float:
    return alpha_scale * k * k


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, block):
        r, c = np.meshgrid(rows, cols, indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.asarray(block).ravel())

    def tocsr(self, n):
        if not self.vals:
            return sp.csr_matrix((n, n))
        mat = sp.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))), shape=(n, n)
        )
        return mat.tocsr()


def _symmetrize(mat: sp.spmatrix) -> sp.csr_matrix:
    out = (0.5 * (mat + mat.T)).tocsr()
    out.sort_indices()
    return out


def _traces(space: DGSpace, e: int, pts: np.ndarray, normal: np.ndarray):
    basis = space.basis(e)
    phi = basis.values(pts)
    dn = basis.gradients(pts) @ normal
    return phi, dn, phi[:, : space.nb_p]


def _facet_sides(space, a, b, la, exactness):
    pts, w, normal = space.facet_rule(a, la, exactness)
    if b is None:
        sides = [(a, 1.0)]
        avg = 1.0
        h = space.mesh.facet_h(a)
    else:
        sides = [(a, 1.0), (b, -1.0)]
        avg = 0.5
        h = space.mesh.facet_h(a, b)
    return pts, w, normal, sides, avg, h


def assemble_a(space: DGSpace, nu: float, alpha: float) -> sp.csr_matrix:
    """Velocity block of the interior-penalty form, as an N x N matrix."""
    trip = _Triplets()
    k = space.k
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, 2 * k)
        grad = space.basis(e).gradients(pts)
        block = nu * np.einsum("q,qid,qjd->ij", w, grad, grad)
        for c in range(2):
            dofs = space.velocity_dofs(e, c)
            trip.add(dofs, dofs, block)

    for a, b, la in space.facets():
        pts, w, normal, sides, avg, h = _facet_sides(space, a, b, la, 2 * k)
        pen = alpha * nu / h
        tr = {}
        for el, sign in sides:
            phi, dn, _ = _traces(space, el, pts, normal)
            tr[el] = (sign * phi, avg * nu * dn)
        for s, _ in sides:
            Js, Ds = tr[s]
            for t, _ in sides:
                Jt, Dt = tr[t]
                block = -Js.T @ (w[:, None] * Dt) - Ds.T @ (w[:, None] * Jt) + pen * Js.T @ (w[:, None] * Jt)
                for c in range(2):
                    trip.add(space.velocity_dofs(s, c), space.velocity_dofs(t, c), block)
    return _symmetrize(trip.tocsr(space.ndof))


def assemble_b(space: DGSpace) -> sp.csr_matrix:
    """Pressure-velocity coupling: entry (i, j) = b_h(phi_j, psi_i), rows on pressure dofs."""
    trip = _Triplets()
    k = space.k
    nb_p = space.nb_p
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, 2 * k)
        basis = space.basis(e)
        psi = basis.values(pts)[:, :nb_p]
        grad = basis.gradients(pts)
        for c in range(2):
            block = -psi.T @ (w[:, None] * grad[:, :, c])
            trip.add(space.pressure_dofs(e), space.velocity_dofs(e, c), block)

    for a, b, la in space.facets():
        pts, w, normal, sides, avg, _ = _facet_sides(space, a, b, la, 2 * k)
        tr = {el: (sign, _traces(space, el, pts, normal)) for el, sign in sides}
        for s, _ in sides:
            psi_s = avg * tr[s][1][2]
            for t, _ in sides:
                sign_t, (phi_t, _, _) = tr[t]
                base = psi_s.T @ (w[:, None] * (sign_t * phi_t))
                for c in range(2):
                    trip.add(space.pressure_dofs(s), space.velocity_dofs(t, c), normal[c] * base)
    mat = trip.tocsr(space.ndof)
    mat.sort_indices()
    return mat


def assemble_K(space: DGSpace, nu: float, alpha: float) -> sp.csr_matrix:
    """Combined saddle-point matrix A + B + B^T (exactly symmetric)."""
    A = assemble_a(space, nu, alpha)
    B = assemble_b(space)
    K = (A + (B + B.T)).tocsr()
    K.sort_indices()
    return K


def assemble_load(space: DGSpace, f, g, dirichlet=None, nu: float = 1.0, alpha: float | None = None) -> np.ndarray:
    """Right-hand side (f, v) + (g, q) plus Nitsche terms for Dirichlet data.

    ``f`` and ``dirichlet`` map (npoints, 2) to (npoints, 2); ``g`` maps to npoints.
    """
    if alpha is None:
        alpha = default_alpha(space.k)
    k = space.k
    q = 2 * k + LOAD_OVERSAMPLE
    rhs = np.zeros(space.ndof)
    nb_p = space.nb_p
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, q)
        phi = space.basis(e).values(pts)
        fv = np.asarray(f(pts), dtype=float)
        for c in range(2):
            rhs[space.velocity_dofs(e, c)] += phi.T @ (w * fv[:, c])
        rhs[space.pressure_dofs(e)] += phi[:, :nb_p].T @ (w * np.asarray(g(pts), dtype=float))

    if dirichlet is None:
        return rhs
    for a, la in space.mesh.boundary_facets:
        a, la = int(a), int(la)
        pts, w, normal = space.facet_rule(a, la, q)
        pen = alpha * nu / space.mesh.facet_h(a)
        uD = np.asarray(dirichlet(pts), dtype=float)
        phi, dn, psi = _traces(space, a, pts, normal)
        for c in range(2):
            rhs[space.velocity_dofs(a, c)] += (-nu * dn + pen * phi).T @ (w * uD[:, c])
        rhs[space.pressure_dofs(a)] += psi.T @ (w * (uD @ normal))
    return rhs


def mean_constraint_row(space: DGSpace) -> np.ndarray:
    """Vector c with c . x = integral of the pressure encoded in x."""
    row = np.zeros(space.ndof)
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, space.k)
        psi = space.basis(e).values(pts)[:, : space.nb_p]
        row[space.pressure_dofs(e)] = psi.T @ w
    return row


def append_mean_constraint(system: SparseSystem, space: DGSpace) -> SparseSystem:
    """Border the system with one Lagrange multiplier enforcing zero mean pressure."""
    c = sp.csr_matrix(mean_constraint_row(space)[None, :])
    mat = sp.bmat([[system.matrix, c.T], [c, None]], format="csr")
    mat.sort_indices()
    rhs = np.concatenate([system.rhs, [0.0]])
    return SparseSystem(matrix=mat, rhs=rhs, alpha=system.alpha, nu=system.nu)


def assemble_system(space: DGSpace, problem, nu: float = 1.0, alpha: float | None = None) -> SparseSystem:
    """Full bordered DG system for a manufactured problem."""
    if alpha is None:
        alpha = default_alpha(space.k)
    K = assemble_K(space, nu, alpha)
    rhs = assemble_load(space, problem.f, problem.g, problem.u_D, nu=nu, alpha=alpha)
    return append_mean_constraint(SparseSystem(K, rhs, alpha, nu), space)


def write_coordinate_matrix(path, matrix: sp.spmatrix) -> None:
    """Write ``row col value`` lines, 17 significant digits, sorted by (row, col)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="\n") as fh:
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}\n")
