import numpy as np
import pytest
import sympy as sy

from trefftz_stokes.polybasis import map_triangle_rule, triangle_quadrature
from trefftz_stokes.problems import get_problem, stream_function_solution, taylor_patch_solution, with_zero_data

x, y = sy.symbols("x y")
zeta = x**2 * (1 - x) ** 2 * y**2 * (1 - y) ** 2
U = (sy.diff(zeta, y), -sy.diff(zeta, x))
P = x**6 + y**6 - sy.Rational(2, 7)


def sym_fields(nu):
    f = tuple(-nu * (sy.diff(c, x, 2) + sy.diff(c, y, 2)) + sy.diff(P, v) for c, v in zip(U, (x, y)))
    return f


@pytest.fixture
def pts():
    return np.random.default_rng(3).uniform(0, 1, size=(25, 2))


@pytest.mark.parametrize("nu", [1.0, 0.01])
def test_stream_function_vs_sympy(nu, pts):
    sol = stream_function_solution(nu)
    lam = lambda e: sy.lambdify((x, y), e, "numpy")
    u_ref = np.column_stack([np.broadcast_to(lam(c)(pts[:, 0], pts[:, 1]), len(pts)) for c in U])
    assert np.allclose(sol.u(pts), u_ref, atol=1e-14)
    grad_ref = np.stack(
        [np.column_stack([lam(sy.diff(c, v))(pts[:, 0], pts[:, 1]) for v in (x, y)]) for c in U], axis=1
    )
    assert np.allclose(sol.grad_u(pts), grad_ref, atol=1e-14)
    f_ref = np.column_stack([lam(c)(pts[:, 0], pts[:, 1]) for c in sym_fields(nu)])
    assert np.allclose(sol.f(pts), f_ref, atol=1e-13)
    assert np.allclose(sol.p(pts), lam(P)(pts[:, 0], pts[:, 1]), atol=1e-15)
    div = sol.grad_u(pts)[:, 0, 0] + sol.grad_u(pts)[:, 1, 1]
    assert np.allclose(div, -sol.g(pts), atol=1e-12)


def test_center_values():
    sol = stream_function_solution(1.0)
    c = np.array([[0.5, 0.5]])
    assert np.allclose(sol.f(c), [[0.1875, 0.1875]], atol=1e-15)
    assert sol.p(c)[0] == pytest.approx(-57 / 224, abs=1e-15)


def test_velocity_vanishes_on_boundary():
    sol = stream_function_solution()
    t = np.linspace(0, 1, 5)
    edges = np.concatenate([
        np.column_stack([t, 0 * t]), np.column_stack([t, 0 * t + 1]),
        np.column_stack([0 * t, t]), np.column_stack([0 * t + 1, t]),
    ])
    assert len(edges) == 20
    assert np.abs(sol.u(edges)).max() < 1e-15


def test_pressure_has_zero_mean():
    assert sy.integrate(P, (x, 0, 1), (y, 0, 1)) == 0
    sol = stream_function_solution()
    total = 0.0
    for tri in ([(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 1), (0, 1)]):
        pts, w = map_triangle_rule(np.array(tri, float), triangle_quadrature(12))
        total += w @ sol.p(pts)
    assert abs(total) < 1e-12


def test_taylor_patch_data(pts):
    sol = taylor_patch_solution()
    assert np.allclose(sol.u(pts), pts[:, ::-1])
    assert np.all(sol.f(pts) == 0) and np.all(sol.g(pts) == 0)
    assert np.allclose(sol.u_D(pts), sol.u(pts))


def test_zero_data_keeps_reference(pts):
    sol = with_zero_data(stream_function_solution())
    assert np.all(sol.f(pts) == 0) and np.all(sol.u_D(pts) == 0)
    assert np.abs(sol.u(pts)).max() > 0


def test_unknown_problem():
    with pytest.raises(ValueError):
        get_problem("lid-driven")
