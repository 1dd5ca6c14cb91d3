"""Structured simplicial triangulations of the unit square.

Facet conventions used throughout the package:

* local edge ``l`` of an element joins its vertices ``l`` and ``(l + 1) % 3``;
* an interior facet is stored as ``(A, la, B, lb)`` with ``A < B``; its normal
  points from ``A`` into ``B`` and jumps are ``v_A - v_B``;
* a boundary facet is stored as ``(A, la)`` with the outward normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FacetGeometry:
    normal: np.ndarray
    length: float
    endpoints: np.ndarray


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray
    elements: np.ndarray
    interior_facets: np.ndarray
    boundary_facets: np.ndarray
    h_per_element: np.ndarray = field(repr=False)

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def h_max(self) -> float:
        return float(self.h_per_element.max())

    def element_vertices(self, e: int) -> np.ndarray:
        return self.vertices[self.elements[e]]

    def area(self, e: int) -> float:
        return _signed_area(self.element_vertices(e))

    def centroid(self, e: int) -> np.ndarray:
        return self.element_vertices(e).mean(axis=0)

    def facet_geometry(self, e: int, local_edge: int) -> FacetGeometry:
        """Geometry of local edge ``local_edge`` of element ``e``, normal outward from ``e``."""
        verts = self.element_vertices(e)
        p0 = verts[local_edge]
        p1 = verts[(local_edge + 1) % 3]
        d = p1 - p0
        length = float(np.hypot(d[0], d[1]))
        normal = np.array([d[1], -d[0]]) / length
        return FacetGeometry(normal=normal, length=length, endpoints=np.array([p0, p1]))

    def facet_h(self, a: int, b: int | None = None) -> float:
        """Mesh size attached to a facet: mean of the adjacent element diameters."""
        if b is None:
            return float(self.h_per_element[a])
        return 0.5 * float(self.h_per_element[a] + self.h_per_element[b])


def _signed_area(verts: np.ndarray) -> float:
    (x0, y0), (x1, y1), (x2, y2) = verts
    return 0.5 * float((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def element_diameter(verts: np.ndarray) -> float:
    """Longest edge length of a triangle given as a (3, 2) array."""
    verts = np.asarray(verts, dtype=float)
    edges = verts[[1, 2, 0]] - verts
    return float(np.sqrt((edges**2).sum(axis=1)).max())


def build_structured_mesh(n: int) -> Mesh:
    """Split an ``n`` x ``n`` grid of the unit square into ``2 n^2`` triangles.

    Every square is cut along its (0,0)-(1,1) diagonal.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"mesh resolution must be a positive integer, got {n!r}")
    n = int(n)
    t = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(t, t)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            elements.append((v00, v10, v11))
            elements.append((v00, v11, v01))
    elements = np.array(elements, dtype=np.int64)

    edge_owners: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for e, tri in enumerate(elements):
        for l in range(3):
            key = tuple(sorted((int(tri[l]), int(tri[(l + 1) % 3]))))
            edge_owners.setdefault(key, []).append((e, l))

    interior, boundary = [], []
    for owners in edge_owners.values():
        if len(owners) == 2:
            (a, la), (b, lb) = sorted(owners)
            interior.append((a, la, b, lb))
        elif len(owners) == 1:
            boundary.append(owners[0])
        else:
            raise RuntimeError("non-manifold edge in structured mesh")

    h = np.array([element_diameter(vertices[tri]) for tri in elements])
    return Mesh(
        vertices=vertices,
        elements=elements,
        interior_facets=np.array(interior, dtype=np.int64).reshape(-1, 4),
        boundary_facets=np.array(boundary, dtype=np.int64).reshape(-1, 2),
        h_per_element=h,
    )
