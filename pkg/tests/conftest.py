import numpy as np
import pytest

from trefftz_stokes.polybasis import l2_project


def interpolate(space, u=None, p=None, per_element=False):
    """DG coefficients of element-wise polynomial fields via exact local projection.

    ``u`` maps points to (npoints, 2), ``p`` to npoints. With ``per_element``
    the callables also receive the element index as a second argument.
    """
    x = np.zeros(space.ndof)
    for e in range(space.mesh.num_elements):
        verts = space.mesh.element_vertices(e)
        basis = space.basis(e)
        if u is not None:
            ue = (lambda pts, e=e: u(pts, e)) if per_element else u
            for c in range(2):
                x[space.velocity_dofs(e, c)] = l2_project(lambda pts: ue(pts)[:, c], basis, verts)
        if p is not None:
            pe = (lambda pts, e=e: p(pts, e)) if per_element else p
            pbasis = type(basis)(space.k - 1, basis.center, basis.scale)
            x[space.pressure_dofs(e)] = l2_project(pe, pbasis, verts)
    return x


def hat_function(mesh, vertex):
    """Continuous P1 hat function of ``vertex`` as (value(pts, e), grad(e))."""

    def coefficients(e):
        verts = mesh.element_vertices(e)
        vals = (mesh.elements[e] == vertex).astype(float)
        mat = np.column_stack([np.ones(3), verts])
        return np.linalg.solve(mat, vals)

    def value(pts, e):
        c = coefficients(e)
        return c[0] + pts @ c[1:]

    def grad(e):
        return coefficients(e)[1:]

    return value, grad


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_RESULTS = {}


@pytest.fixture
def record_criterion():
    """Store a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(number, ok, detail):
        ACCEPTANCE_RESULTS[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
