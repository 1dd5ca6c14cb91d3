"""Manufactured Stokes problems on the unit square.

All callables take an (npoints, 2) array. Vector fields return (npoints, 2),
gradients of vector fields return (npoints, 2, 2) with ``[..., c, j] = d u_c / d x_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ManufacturedSolution:
    name: str
    nu: float
    u: Callable
    grad_u: Callable
    p: Callable
    grad_p: Callable
    f: Callable
    g: Callable
    boundary: Callable | None = None

    def u_D(self, pts):
        """Dirichlet data; the trace of ``u`` unless overridden."""
        if self.boundary is not None:
            return self.boundary(pts)
        return self.u(pts)


def _bump(t):
    # t^2 (1 - t)^2 and its first three derivatives
    return (
        t**2 * (1 - t) ** 2,
        2 * t - 6 * t**2 + 4 * t**3,
        2 - 12 * t + 12 * t**2,
        -12 + 24 * t,
    )


def stream_function_solution(nu: float = 1.0) -> ManufacturedSolution:
    """u = curl(x^2 (1-x)^2 y^2 (1-y)^2), p = x^6 + y^6 - 2/7."""

    def u(pts):
        a, a1, _, _ = _bump(pts[:, 0])
        b, b1, _, _ = _bump(pts[:, 1])
        return np.column_stack([a * b1, -a1 * b])

    def grad_u(pts):
        a, a1, a2, _ = _bump(pts[:, 0])
        b, b1, b2, _ = _bump(pts[:, 1])
        out = np.empty((len(pts), 2, 2))
        out[:, 0, 0] = a1 * b1
        out[:, 0, 1] = a * b2
        out[:, 1, 0] = -a2 * b
        out[:, 1, 1] = -a1 * b1
        return out

    def lap_u(pts):
        a, a1, a2, a3 = _bump(pts[:, 0])
        b, b1, b2, b3 = _bump(pts[:, 1])
        return np.column_stack([a2 * b1 + a * b3, -(a3 * b + a1 * b2)])

    def p(pts):
        return pts[:, 0] ** 6 + pts[:, 1] ** 6 - 2.0 / 7.0

    def grad_p(pts):
        return 6.0 * pts**5

    def f(pts):
        return -nu * lap_u(pts) + grad_p(pts)

    def g(pts):
        return np.zeros(len(pts))

    return ManufacturedSolution("manufactured", nu, u, grad_u, p, grad_p, f, g)


def taylor_patch_solution(nu: float = 1.0) -> ManufacturedSolution:
    """u = (y, x), p = 0: harmonic and divergence-free, so f = g = 0."""

    def u(pts):
        return np.column_stack([pts[:, 1], pts[:, 0]])

    def grad_u(pts):
        out = np.zeros((len(pts), 2, 2))
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = 1.0
        return out

    zero = lambda pts: np.zeros(len(pts))
    zero_vec = lambda pts: np.zeros((len(pts), 2))
    return ManufacturedSolution("taylor-patch", nu, u, grad_u, zero, zero_vec, zero_vec, zero)


def zero_solution(nu: float = 1.0) -> ManufacturedSolution:
    zero = lambda pts: np.zeros(len(pts))
    zero_vec = lambda pts: np.zeros((len(pts), 2))
    zero_mat = lambda pts: np.zeros((len(pts), 2, 2))
    return ManufacturedSolution("zero", nu, zero_vec, zero_mat, zero, zero_vec, zero_vec, zero)


def with_zero_data(sol: ManufacturedSolution) -> ManufacturedSolution:
    """Keep ``sol`` as the error reference but drive the solve with f = g = u_D = 0."""
    zero = lambda pts: np.zeros(len(pts))
    zero_vec = lambda pts: np.zeros((len(pts), 2))
    return ManufacturedSolution(
        sol.name + "+zero-data", sol.nu, sol.u, sol.grad_u, sol.p, sol.grad_p, zero_vec, zero, boundary=zero_vec
    )


PROBLEMS = {
    "manufactured": stream_function_solution,
    "taylor-patch": taylor_patch_solution,
    "zero": zero_solution,
}


def get_problem(name: str, nu: float = 1.0) -> ManufacturedSolution:
    try:
        return PROBLEMS[name](nu)
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
