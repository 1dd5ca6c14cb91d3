"""Scaled monomial bases and Gauss quadrature on triangles and segments."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np


def dim_poly(k: int, d: int = 2) -> int:
    """Dimension of polynomials of total degree <= k in d variables (0 for k < 0)."""
    if k < 0:
        return 0
    out = 1
    for i in range(1, d + 1):
        out = out * (k + i) // i
    return out


@lru_cache(maxsize=None)
def monomial_exponents(k: int) -> np.ndarray:
    """Exponent pairs (a, b) of x^a y^b, ordered by total degree then descending x-power.

    The degree-m basis is always a prefix of the degree-k basis for m <= k.
    """
    exps = [(deg - b, b) for deg in range(k + 1) for b in range(deg + 1)]
    out = np.array(exps, dtype=np.int64).reshape(-1, 2)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BasisSet:
    """Monomials in the scaled coordinates ``(x - center) / scale``."""

    degree: int
    center: np.ndarray
    scale: float

    @property
    def size(self) -> int:
        return dim_poly(self.degree)

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.degree)

    def _scaled(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        s = (pts - self.center) / self.scale
        return s[:, 0:1], s[:, 1:2]

    def values(self, points) -> np.ndarray:
        """Basis values, shape (npoints, size)."""
        X, Y = self._scaled(points)
        a, b = self.exponents.T
        return X**a * Y**b

    def gradients(self, points) -> np.ndarray:
        """Basis gradients, shape (npoints, size, 2)."""
        X, Y = self._scaled(points)
        a, b = self.exponents.T
        dx = a * X ** np.maximum(a - 1, 0) * Y**b
        dy = b * X**a * Y ** np.maximum(b - 1, 0)
        return np.stack([dx, dy], axis=-1) / self.scale

    def laplacians(self, points) -> np.ndarray:
        """Basis Laplacians, shape (npoints, size)."""
        X, Y = self._scaled(points)
        a, b = self.exponents.T
        dxx = a * (a - 1) * X ** np.maximum(a - 2, 0) * Y**b
        dyy = b * (b - 1) * X**a * Y ** np.maximum(b - 2, 0)
        return (dxx + dyy) / self.scale**2


def eval_basis(basis: BasisSet, point) -> np.ndarray:
    return basis.values(point)[0] if np.ndim(point) == 1 else basis.values(point)


def eval_grad(basis: BasisSet, point) -> np.ndarray:
    return basis.gradients(point)[0] if np.ndim(point) == 1 else basis.gradients(point)


def eval_laplacian(basis: BasisSet, point) -> np.ndarray:
    return basis.laplacians(point)[0] if np.ndim(point) == 1 else basis.laplacians(point)


def element_basis(mesh, e: int, k: int) -> BasisSet:
    return BasisSet(degree=k, center=mesh.centroid(e), scale=float(mesh.h_per_element[e]))


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int


@lru_cache(maxsize=None)
def segment_quadrature(exactness_degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]."""
    if exactness_degree < 0:
        raise ValueError("exactness degree must be non-negative")
    m = max(1, ceil((exactness_degree + 1) / 2))
    x, w = np.polynomial.legendre.leggauss(m)
    return QuadratureRule(points=0.5 * (x + 1.0), weights=0.5 * w, exactness_degree=exactness_degree)


@lru_cache(maxsize=None)
def triangle_quadrature(exactness_degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss-Legendre rule on the triangle (0,0), (1,0), (0,1)."""
    if exactness_degree < 0:
        raise ValueError("exactness degree must be non-negative")
    m = max(1, ceil((exactness_degree + 2) / 2))
    x, w = np.polynomial.legendre.leggauss(m)
    s, ws = 0.5 * (x + 1.0), 0.5 * w
    S, T = np.meshgrid(s, s, indexing="ij")
    WS, WT = np.meshgrid(ws, ws, indexing="ij")
    # (s, t) in the unit square -> (s, t (1 - s)) in the triangle
    xi = S.ravel()
    eta = (T * (1.0 - S)).ravel()
    weights = (WS * WT * (1.0 - S)).ravel()
    return QuadratureRule(points=np.column_stack([xi, eta]), weights=weights, exactness_degree=exactness_degree)


def map_triangle_rule(verts: np.ndarray, rule: QuadratureRule):
    """Physical points and weights of ``rule`` on the triangle ``verts``."""
    v0, v1, v2 = np.asarray(verts, dtype=float)
    jac = np.column_stack([v1 - v0, v2 - v0])
    pts = v0 + rule.points @ jac.T
    return pts, rule.weights * abs(np.linalg.det(jac))


def map_segment_rule(endpoints: np.ndarray, rule: QuadratureRule):
    p0, p1 = np.asarray(endpoints, dtype=float)
    pts = p0 + rule.points[:, None] * (p1 - p0)
    return pts, rule.weights * float(np.linalg.norm(p1 - p0))


def mass_matrix(basis: BasisSet, verts) -> np.ndarray:
    pts, w = map_triangle_rule(verts, triangle_quadrature(2 * basis.degree))
    phi = basis.values(pts)
    return phi.T @ (w[:, None] * phi)


def l2_project(f, basis: BasisSet, verts, oversample: int = 8) -> np.ndarray:
    """Coefficients of the L2 projection of scalar ``f`` onto ``basis`` on one triangle.

    ``f`` maps an (npoints, 2) array to npoints values.
    """
    pts, w = map_triangle_rule(verts, triangle_quadrature(2 * basis.degree + oversample))
    phi = basis.values(pts)
    mass = phi.T @ (w[:, None] * phi)
    rhs = phi.T @ (w * np.asarray(f(pts), dtype=float))
    return np.linalg.solve(mass, rhs)
