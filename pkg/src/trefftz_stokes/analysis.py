"""Discrete norms, errors against exact solutions and convergence rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .polybasis import dim_poly
from .stokes_dg import DGSpace

ERROR_OVERSAMPLE = 8


@dataclass
class ErrorReport:
    method: str
    k: int
    nu: float
    n: int
    h: float
    ndof_full: int
    ndof_condensed: int
    u_l2: float
    p_l2: float
    u_1h: float
    p_0h: float
    trefftz_momentum_residual: float
    div_residual: float

    def as_dict(self) -> dict:
        return asdict(self)


def _zero_vec(pts):
    return np.zeros((len(pts), 2))


def _zero_mat(pts):
    return np.zeros((len(pts), 2, 2))


def _zero(pts):
    return np.zeros(len(pts))


def _velocity(space, x, e, pts):
    basis = space.basis(e)
    ux, uy, _ = space.local(x, e)
    phi = basis.values(pts)
    grad = basis.gradients(pts)
    vals = np.column_stack([phi @ ux, phi @ uy])
    grads = np.stack([np.einsum("qid,i->qd", grad, ux), np.einsum("qid,i->qd", grad, uy)], axis=1)
    return vals, grads


def _pressure(space, x, e, pts):
    basis = space.basis(e)
    _, _, p = space.local(x, e)
    nb = space.nb_p
    return basis.values(pts)[:, :nb] @ p, np.einsum("qid,i->qd", basis.gradients(pts)[:, :nb], p)


def _error_quad(space):
    return 2 * space.k + ERROR_OVERSAMPLE


def l2_error(space: DGSpace, x: np.ndarray, exact, field: str = "u") -> float:
    """Broken L2 norm of ``exact - field_h``; ``field`` is "u" or "p"."""
    total = 0.0
    q = _error_quad(space)
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, q)
        if field == "u":
            diff = exact(pts) - _velocity(space, x, e, pts)[0]
            total += float(w @ (diff**2).sum(axis=1))
        elif field == "p":
            diff = exact(pts) - _pressure(space, x, e, pts)[0]
            total += float(w @ diff**2)
        else:
            raise ValueError(f"unknown field {field!r}")
    return math.sqrt(total)


def norm_1h(space: DGSpace, x: np.ndarray, exact=None, exact_grad=None) -> float:
    """Broken H1 norm of ``exact - u_h`` (or of ``u_h`` if no exact field is given).

    Facet jumps are weighted by the inverse facet size; on boundary facets the
    jump is the trace itself.
    """
    exact = exact or _zero_vec
    exact_grad = exact_grad or _zero_mat
    q = _error_quad(space)
    total = 0.0
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, q)
        diff = exact_grad(pts) - _velocity(space, x, e, pts)[1]
        total += float(w @ (diff**2).sum(axis=(1, 2)))
    for a, b, la in space.facets():
        pts, w, _ = space.facet_rule(a, la, q)
        ua = exact(pts) - _velocity(space, x, a, pts)[0]
        if b is None:
            jump, h = ua, space.mesh.facet_h(a)
        else:
            jump, h = ua - (exact(pts) - _velocity(space, x, b, pts)[0]), space.mesh.facet_h(a, b)
        total += float(w @ (jump**2).sum(axis=1)) / h
    return math.sqrt(total)


def norm_0h(space: DGSpace, x: np.ndarray, exact=None, exact_grad=None) -> float:
    """h-weighted pressure gradient plus interior jumps of element means, for ``exact - p_h``."""
    exact = exact or _zero
    exact_grad = exact_grad or _zero_vec
    q = _error_quad(space)
    mesh = space.mesh
    total = 0.0
    means = np.empty(mesh.num_elements)
    for e in range(mesh.num_elements):
        pts, w = space.volume_rule(e, q)
        diff = exact_grad(pts) - _pressure(space, x, e, pts)[1]
        total += mesh.h_per_element[e] ** 2 * float(w @ (diff**2).sum(axis=1))
        means[e] = float(w @ (exact(pts) - _pressure(space, x, e, pts)[0])) / w.sum()
    for a, la, b, _ in mesh.interior_facets:
        length = mesh.facet_geometry(int(a), int(la)).length
        total += mesh.facet_h(int(a), int(b)) * length * (means[a] - means[b]) ** 2
    return math.sqrt(total)


def structural_residuals(space: DGSpace, x: np.ndarray, f, g, nu: float = 1.0, per_element: bool = False):
    """Broken L2 norms of ``-nu lap u_h + grad p_h - P^{k-2} f`` and ``div u_h + P^{k-1} g``.

    ``P^m`` denotes the element-wise L2 projection (zero for m < 0). With
    ``per_element`` the two arrays of element-wise norms are returned instead.
    """
    k = space.k
    q = _error_quad(space)
    n_lap, nb_p = dim_poly(k - 2), space.nb_p
    ne = space.mesh.num_elements
    mom, div = np.zeros(ne), np.zeros(ne)
    for e in range(ne):
        basis = space.basis(e)
        pts, w = space.volume_rule(e, q)
        phi = basis.values(pts)
        grad = basis.gradients(pts)
        lap = basis.laplacians(pts)
        ux, uy, p = space.local(x, e)
        mom_h = -nu * np.column_stack([lap @ ux, lap @ uy]) + np.einsum("qid,i->qd", grad[:, :nb_p], p)
        div_h = grad[:, :, 0] @ ux + grad[:, :, 1] @ uy

        fv = np.asarray(f(pts), dtype=float)
        gv = np.asarray(g(pts), dtype=float)
        mass_m = phi[:, :n_lap].T @ (w[:, None] * phi[:, :n_lap])
        mass_d = phi[:, :nb_p].T @ (w[:, None] * phi[:, :nb_p])
        if n_lap:
            cf = np.linalg.solve(mass_m, phi[:, :n_lap].T @ (w[:, None] * fv))
            proj_f = phi[:, :n_lap] @ cf
        else:
            proj_f = np.zeros_like(fv)
        proj_g = phi[:, :nb_p] @ np.linalg.solve(mass_d, phi[:, :nb_p].T @ (w * gv))

        mom[e] = float(w @ ((mom_h - proj_f) ** 2).sum(axis=1))
        div[e] = float(w @ (div_h + proj_g) ** 2)
    if per_element:
        return np.sqrt(mom), np.sqrt(div)
    return math.sqrt(mom.sum()), math.sqrt(div.sum())


def max_divergence(space: DGSpace, x: np.ndarray) -> float:
    """Largest |div u_h| over the error quadrature points of all elements."""
    q = _error_quad(space)
    out = 0.0
    for e in range(space.mesh.num_elements):
        pts, _ = space.volume_rule(e, q)
        grads = _velocity(space, x, e, pts)[1]
        out = max(out, float(np.abs(grads[:, 0, 0] + grads[:, 1, 1]).max()))
    return out


def pressure_mean(space: DGSpace, x: np.ndarray) -> float:
    total = 0.0
    for e in range(space.mesh.num_elements):
        pts, w = space.volume_rule(e, space.k)
        total += float(w @ _pressure(space, x, e, pts)[0])
    return total


def eoc(errors) -> list[float]:
    """Rates log(e_i / e_{i+1}) / log(h_i / h_{i+1}); NaN where an error is not positive."""
    pairs = [(float(h), float(err)) for h, err in errors]
    rates = []
    for (h0, e0), (h1, e1) in zip(pairs, pairs[1:]):
        if not h0 > h1:
            raise ValueError("mesh sizes must be strictly decreasing")
        if e0 <= 0 or e1 <= 0:
            rates.append(math.nan)
        else:
            rates.append(math.log(e0 / e1) / math.log(h0 / h1))
    return rates


def error_report(space, solution, problem, nu, n, ndof_full, ndof_condensed) -> ErrorReport:
    x = solution.coefficients
    mom, div = structural_residuals(space, x, problem.f, problem.g, nu)
    return ErrorReport(
        method=solution.method,
        k=space.k,
        nu=nu,
        n=n,
        h=space.mesh.h_max,
        ndof_full=ndof_full,
        ndof_condensed=ndof_condensed,
        u_l2=l2_error(space, x, problem.u, "u"),
        p_l2=l2_error(space, x, problem.p, "p"),
        u_1h=norm_1h(space, x, problem.u, problem.grad_u),
        p_0h=norm_0h(space, x, problem.p, problem.grad_p),
        trefftz_momentum_residual=mom,
        div_residual=div,
    )
